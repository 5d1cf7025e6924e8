//! Per-bridge sampling cost against the number of basis functions, with a
//! linear fit.

use wce_bridge::experiment::{benchmark, linear_fit_r2, ExperimentConfig};
use wce_bridge::Result;

fn main() -> Result<()> {
    let cfg = ExperimentConfig {
        benchmark_levels: vec![50, 100, 200, 400],
        n_paths: 200,
        ..ExperimentConfig::default()
    };
    let rows = benchmark(&cfg)?;
    println!("{:>5} {:>7} {:>10} {:>12}", "L", "rows", "solve s", "s/bridge");
    for r in &rows {
        println!("{:>5} {:>7} {:>10.4} {:>12.3e}", r.l, r.coefficients, r.solve_seconds, r.seconds_per_bridge);
    }
    let x: Vec<f64> = rows.iter().map(|r| r.l as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.seconds_per_bridge).collect();
    println!("R^2 of linear fit: {:.4}", linear_fit_r2(&x, &y));
    Ok(())
}
