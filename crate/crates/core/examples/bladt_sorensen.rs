//! Bladt-Sorensen rejection bridges for OU: acceptance rates for a
//! crossing-friendly and a crossing-hostile endpoint pair, and one sample.

use wce_bridge::{bladt_sorensen_acceptance, bladt_sorensen_bridge, BridgeSpec, Result, SdeModel, TimeGrid};

fn main() -> Result<()> {
    let model = SdeModel::ou(0.5, 1.0, 0.0);
    let grid = TimeGrid::new(1.0, 1000)?;
    for (eta, theta) in [(0.0, 0.0), (0.0, 2.0), (1.5, 1.5)] {
        let spec = BridgeSpec::new(eta, theta, 1.0)?;
        let rate = bladt_sorensen_acceptance(&model, &spec, &grid, 20_000, false, 5)?;
        println!("({eta}, {theta}): acceptance {rate:.4}");
    }

    let spec = BridgeSpec::new(0.0, 1.0, 1.0)?;
    let s = bladt_sorensen_bridge(&model, &spec, &grid, 10_000, false, 5, 0)?;
    println!("sample accepted after {} attempts", s.attempts);
    for node in (0..=1000).step_by(100) {
        println!("{:>4.1} {:>8.4}", node as f64 / 1000.0, s.path.values[node]);
    }
    Ok(())
}
