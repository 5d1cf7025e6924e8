//! Midpoint statistics of chaos bridges for the logistic and protein kinetic
//! models over a few endpoint pairs.

use wce_bridge::experiment::{simulate, ExperimentConfig, ModelConfig};
use wce_bridge::Result;

fn main() -> Result<()> {
    let cases = [
        ("logistic", [(0.2, 0.3), (0.1, 0.4), (0.8, 0.6)]),
        ("protein", [(0.2, 0.2), (0.1, 0.3), (0.8, 0.4)]),
    ];
    println!("{:>9} {:>5} {:>6} {:>9} {:>9}", "model", "eta", "theta", "mean", "var");
    for (name, pairs) in cases {
        for (eta, theta) in pairs {
            let cfg = ExperimentConfig {
                model: ModelConfig::from_name(name).expect("known model"),
                eta,
                theta,
                l: 50,
                n_paths: 2000,
                seed: 2,
                ..ExperimentConfig::default()
            };
            let s = simulate(&cfg)?.summary;
            println!("{name:>9} {eta:>5} {theta:>6} {:>9.5} {:>9.6}", s.mean, s.variance);
        }
    }
    Ok(())
}
