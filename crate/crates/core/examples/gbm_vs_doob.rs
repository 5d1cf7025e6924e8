//! GBM chaos bridges against the Doob h-transform sampler: marginal moments
//! at the midpoint, the KS result and a short QQ table.

use wce_bridge::experiment::{validate_against, ExperimentConfig, ModelConfig};
use wce_bridge::stats::moments;
use wce_bridge::{BaselineKind, Result};

fn main() -> Result<()> {
    let cfg = ExperimentConfig {
        model: ModelConfig::from_name("gbm").expect("known model"),
        eta: 0.2,
        theta: 0.3,
        l: 100,
        n_paths: 2000,
        qq_points: 9,
        seed: 3,
        ..ExperimentConfig::default()
    };
    let v = validate_against(&cfg, &BaselineKind::from_name("doob_h").expect("known baseline"))?;
    let (a, b) = (moments(&v.wce.values), moments(&v.baseline.values));
    println!("chaos   mean {:.5} var {:.6}", a.mean, a.variance);
    println!("doob-h  mean {:.5} var {:.6}", b.mean, b.variance);
    println!("KS D = {:.4}, p = {:.3e}, reflections = {}", v.record.d, v.record.p_value, v.reflections);
    println!("{:>9} {:>9}", "chaos", "doob-h");
    for (x, y) in v.qq.q_a.iter().zip(&v.qq.q_b) {
        println!("{x:>9.5} {y:>9.5}");
    }
    Ok(())
}
