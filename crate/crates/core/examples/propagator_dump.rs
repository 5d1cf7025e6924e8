//! Solves the coefficient system for a small GBM expansion and writes every
//! coefficient on the grid as CSV to stdout.

use std::io::stdout;
use std::sync::Arc;

use wce_bridge::output::{write_propagator_csv, ArtifactMeta};
use wce_bridge::{enumerate_full, solve_propagator, BasisSpec, Result, SdeModel, SolverOptions, TimeGrid};

fn main() -> Result<()> {
    let model = SdeModel::gbm(0.2, 0.3, 1.0);
    let set = Arc::new(enumerate_full(2, 2, 1000)?);
    let sol = solve_propagator(
        &model,
        set,
        &BasisSpec::new(1.0, 2)?,
        &TimeGrid::new(1.0, 10)?,
        &SolverOptions::default(),
    )?;
    let meta = ArtifactMeta::new(&model, 0)?;
    write_propagator_csv(&mut stdout().lock(), &meta, &sol).map_err(|e| wce_bridge::Error::Io {
        path: "<stdout>".into(),
        source: e,
    })?;
    eprintln!("X_0(1) = {:.6} (exp(0.2) = {:.6})", sol.row(0)[10], 0.2f64.exp());
    Ok(())
}
