//! Bridge coefficients and pinned bridge paths.
//!
//! The proposal bridge
//!
//! ```text
//! Y(t) = eta + (theta - eta) t/T + (T - t) int_0^t dX(s) / (T - s)
//! ```
//!
//! has chaos coefficients
//! `Y_m(t) = (eta + (theta - eta) t/T) 1{m = 0} + (T - t) int_0^t dX_m(s) / (T - s)`,
//! so one deterministic pass over the propagator solution gives every
//! coefficient, and each bridge sample is a weighted sum of rows.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::{eval_xi, sample_chi, ChaosDraw};
use crate::error::{Error, Result};
use crate::multiindex::IndexSet;
use crate::propagator::{PropagatorSolution, TimeGrid};

/// Endpoints `(0, eta)` and `(T, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub eta: f64,
    pub theta: f64,
    pub horizon: f64,
}

impl BridgeSpec {
    pub fn new(eta: f64, theta: f64, horizon: f64) -> Result<Self> {
        if !(eta.is_finite() && theta.is_finite()) {
            return Err(Error::Argument(format!("bridge endpoints must be finite: ({eta}, {theta})")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::range("horizon T", horizon, "(0, inf)"));
        }
        Ok(BridgeSpec { eta, theta, horizon })
    }
}

/// A sampled trajectory on the grid, pinned at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgePath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub spec: BridgeSpec,
    pub seed: u64,
    pub path: u64,
}

impl BridgePath {
    /// Value at `t`, linear between nodes.
    pub fn at(&self, t: f64) -> f64 {
        self.grid.interpolate(&self.values, t)
    }
}

/// `Y_m(t_j)` for every row of the index set.
#[derive(Debug, Clone)]
pub struct BridgeCoefficients {
    pub grid: TimeGrid,
    pub spec: BridgeSpec,
    pub index_set: Arc<IndexSet>,
    /// Row-major `[row][node]`.
    values: Vec<f64>,
    /// Rows other than the zero index that are not identically zero.
    active: Vec<usize>,
}

impl BridgeCoefficients {
    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.grid.nodes();
        &self.values[row * n..(row + 1) * n]
    }

    /// The deterministic part `Y_0`.
    pub fn mean_path(&self) -> &[f64] {
        self.row(0)
    }

    /// Rows that contribute to samples besides the zero index.
    pub fn active_rows(&self) -> &[usize] {
        &self.active
    }

    /// `Var[Y(t_j)] = sum_{m != 0} Y_m(t_j)^2`.
    pub fn variance_at(&self, node: usize) -> f64 {
        self.active.iter().map(|&r| self.row(r)[node].powi(2)).sum()
    }
}

/// Discretizes `int_0^{t_j} dX_m(s) / (T - s)` as the left-closed partition
/// sum `sum_{i=1}^{j} (X_m(t_i) - X_m(t_{i-1})) / (T - t_i)` and forms `Y_m`.
/// The last node is set to `theta 1{m = 0}` directly.
pub fn transform_to_bridge(sol: &PropagatorSolution, spec: &BridgeSpec) -> Result<BridgeCoefficients> {
    let grid = sol.grid;
    let horizon = grid.horizon();
    if (horizon - spec.horizon).abs() > 1e-12 * horizon {
        return Err(Error::Argument(format!(
            "bridge horizon {} differs from propagator horizon {horizon}",
            spec.horizon
        )));
    }
    let nodes = grid.nodes();
    let steps = grid.steps();
    let times = grid.times();
    let mut values = vec![0.0; sol.rows() * nodes];
    values
        .par_chunks_mut(nodes)
        .enumerate()
        .for_each(|(row, y)| {
            let x = sol.row(row);
            let zero = row == 0;
            let mut q = 0.0;
            y[0] = if zero { spec.eta } else { 0.0 };
            for j in 1..steps {
                let remaining = horizon - times[j];
                q += (x[j] - x[j - 1]) / remaining;
                let line = if zero {
                    spec.eta + (spec.theta - spec.eta) * times[j] / horizon
                } else {
                    0.0
                };
                y[j] = line + remaining * q;
            }
            y[steps] = if zero { spec.theta } else { 0.0 };
        });
    let active = (1..sol.rows())
        .filter(|&r| values[r * nodes..(r + 1) * nodes].iter().any(|&v| v != 0.0))
        .collect();
    Ok(BridgeCoefficients {
        grid,
        spec: *spec,
        index_set: sol.index_set.clone(),
        values,
        active,
    })
}

/// `Y(t_j) = sum_m Y_m(t_j) xi_m` for a given draw.
pub fn bridge_from_draw(coeffs: &BridgeCoefficients, draw: &ChaosDraw) -> BridgePath {
    let mut y = coeffs.mean_path().to_vec();
    for &r in &coeffs.active {
        let xi = eval_xi(draw, coeffs.index_set.get(r));
        for (acc, &c) in y.iter_mut().zip(coeffs.row(r)) {
            *acc += c * xi;
        }
    }
    BridgePath {
        grid: coeffs.grid,
        values: y,
        spec: coeffs.spec,
        seed: draw.seed,
        path: draw.path,
    }
}

/// One bridge for path `path` of master seed `seed`.
pub fn sample_bridge(coeffs: &BridgeCoefficients, seed: u64, path: u64) -> BridgePath {
    let draw = sample_chi(seed, path, coeffs.index_set.bound());
    bridge_from_draw(coeffs, &draw)
}

/// Bridges for a range of path indices, in path order. Each path has its own
/// random stream, so the result does not depend on the thread count.
pub fn sample_bridges(coeffs: &BridgeCoefficients, seed: u64, paths: Range<u64>) -> Vec<BridgePath> {
    paths
        .into_par_iter()
        .map(|p| sample_bridge(coeffs, seed, p))
        .collect()
}

/// The unconditioned truncated expansion `X^{p,L}(t_j) = sum_m X_m(t_j) xi_m`.
pub fn truncated_solution(sol: &PropagatorSolution, draw: &ChaosDraw) -> Vec<f64> {
    let mut x = sol.row(0).to_vec();
    for r in 1..sol.rows() {
        let xi = eval_xi(draw, sol.index_set.get(r));
        for (acc, &c) in x.iter_mut().zip(sol.row(r)) {
            *acc += c * xi;
        }
    }
    x
}
