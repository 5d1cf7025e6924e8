//! Two-sample KS comparison of chaos bridges against the exact OU bridge for
//! a few endpoint pairs and truncation levels.

use wce_bridge::experiment::{validate_against, ExperimentConfig};
use wce_bridge::{BaselineKind, Result};

fn main() -> Result<()> {
    println!("{:>5} {:>6} {:>5} {:>8} {:>8}", "eta", "theta", "L", "D", "p");
    for (eta, theta) in [(0.0, 0.0), (0.0, 2.0)] {
        for l in [5, 25, 100] {
            let cfg = ExperimentConfig {
                eta,
                theta,
                l,
                n_paths: 1000,
                seed: 1,
                ..ExperimentConfig::default()
            };
            let v = validate_against(&cfg, &BaselineKind::ExactOu)?;
            println!("{eta:>5} {theta:>6} {l:>5} {:>8.4} {:>8.4}", v.record.d, v.record.p_value);
        }
    }
    Ok(())
}
