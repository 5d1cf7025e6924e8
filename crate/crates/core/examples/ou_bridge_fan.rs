//! A fan of OU bridges from (0, 0) to (1, 1), printed as a coarse table plus
//! the pointwise mean and standard deviation.

use wce_bridge::experiment::{build_coefficients, ExperimentConfig};
use wce_bridge::{ou_bridge_mean, ou_bridge_variance, sample_bridges, Result};

fn main() -> Result<()> {
    let cfg = ExperimentConfig {
        theta: 1.0,
        l: 50,
        grid: 500,
        seed: 7,
        ..ExperimentConfig::default()
    };
    cfg.validate()?;
    let (_, coeffs) = build_coefficients(&cfg, cfg.l)?;
    let paths = sample_bridges(&coeffs, cfg.seed, 0..8);

    print!("{:>5}", "t");
    for p in &paths {
        print!(" {:>7}", format!("path{}", p.path));
    }
    println!(" {:>8} {:>8} {:>8}", "mean", "sd", "exact sd");
    let spec = cfg.spec();
    for node in (0..=cfg.grid).step_by(50) {
        let t = node as f64 * cfg.horizon / cfg.grid as f64;
        print!("{t:>5.2}");
        for p in &paths {
            print!(" {:>7.3}", p.values[node]);
        }
        println!(
            " {:>8.4} {:>8.4} {:>8.4}",
            coeffs.mean_path()[node],
            coeffs.variance_at(node).sqrt(),
            ou_bridge_variance(0.5, 1.0, cfg.horizon, t).sqrt()
        );
    }
    println!("exact bridge mean at t=0.5: {:.4}", ou_bridge_mean(0.5, &spec, 0.5));
    Ok(())
}
