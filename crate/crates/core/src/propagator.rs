//! Deterministic integration of the propagator system on a uniform grid.
//!
//! The system is lower triangular in chaos order: row `m` only reads rows
//! `m^-(j)` of order `|m| - 1`. All rows are advanced together, which is the
//! same as solving order by order with the lower orders' stage values kept,
//! and rows are evaluated independently so the result does not depend on
//! the number of worker threads.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::models::{Couplings, SdeModel};
use crate::multiindex::IndexSet;

/// Rows at or above this count are evaluated on the rayon pool.
const PARALLEL_ROWS: usize = 2048;

/// Uniform grid `t_j = j T / N`, `j = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::range("horizon T", horizon, "(0, inf)"));
        }
        if steps < 2 {
            return Err(Error::range("grid steps N", steps, ">= 2"));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `N`; there are `N + 1` nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_j`; the last node is exactly `T`.
    pub fn node(&self, j: usize) -> f64 {
        if j == self.steps {
            self.horizon
        } else {
            self.horizon * j as f64 / self.steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes()).map(|j| self.node(j)).collect()
    }

    /// Left node index and interpolation weight for time `t` in `[0, T]`.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let x = (t / self.horizon * self.steps as f64).clamp(0.0, self.steps as f64);
        let j = (x.floor() as usize).min(self.steps - 1);
        let frac = x - j as f64;
        // Snap to a node when `t` is one up to rounding.
        if frac.abs() < 1e-9 {
            (j, 0.0)
        } else if (1.0 - frac).abs() < 1e-9 {
            ((j + 1).min(self.steps), 0.0)
        } else {
            (j, frac)
        }
    }

    /// Linear interpolation of node values at `t`.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let (j, w) = self.locate(t);
        if w == 0.0 {
            values[j]
        } else {
            (1.0 - w) * values[j] + w * values[j + 1]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Integrator {
    /// Classical fourth-order Runge-Kutta, one step per grid interval.
    Rk4,
    /// Adaptive Dormand-Prince 5(4) with cubic Hermite output at grid nodes.
    DormandPrince { rtol: f64, atol: f64 },
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::Rk4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverOptions {
    #[serde(default)]
    pub integrator: Integrator,
}

/// All coefficients `X_m(t_j)` of one model on one grid.
#[derive(Debug, Clone)]
pub struct PropagatorSolution {
    pub grid: TimeGrid,
    pub index_set: Arc<IndexSet>,
    pub model: SdeModel,
    pub basis: BasisSpec,
    /// Row-major `[row][node]`.
    values: Vec<f64>,
}

impl PropagatorSolution {
    pub fn rows(&self) -> usize {
        self.index_set.len()
    }

    /// `X_m(t_j)` for all nodes `j` of row `row`.
    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.grid.nodes();
        &self.values[row * n..(row + 1) * n]
    }

    pub fn value(&self, row: usize, node: usize) -> f64 {
        self.values[row * self.grid.nodes() + node]
    }

    /// `Var[X^{p,L}(t_j)] = sum_{m != 0} X_m(t_j)^2`, by orthonormality of
    /// the chaos family.
    pub fn chaos_variance(&self, node: usize) -> f64 {
        (1..self.rows()).map(|r| self.value(r, node).powi(2)).sum()
    }
}

struct System<'a> {
    model: &'a SdeModel,
    couplings: Couplings,
    basis: &'a BasisSpec,
}

impl System<'_> {
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        if out.len() >= PARALLEL_ROWS {
            out.par_iter_mut().enumerate().for_each(|(row, o)| {
                *o = self.model.row_rhs(row, t, y, &self.couplings, self.basis);
            });
        } else {
            self.model.rhs(t, y, &self.couplings, self.basis, out);
        }
    }
}

/// Integrates every coefficient of `index_set` over `grid`.
pub fn solve_propagator(
    model: &SdeModel,
    index_set: Arc<IndexSet>,
    basis: &BasisSpec,
    grid: &TimeGrid,
    options: &SolverOptions,
) -> Result<PropagatorSolution> {
    if index_set.bound() > basis.count() {
        return Err(Error::Argument(format!(
            "index set length bound {} exceeds basis size {}",
            index_set.bound(),
            basis.count()
        )));
    }
    if (grid.horizon() - basis.horizon()).abs() > 1e-12 * basis.horizon() {
        return Err(Error::Argument(format!(
            "grid horizon {} differs from basis horizon {}",
            grid.horizon(),
            basis.horizon()
        )));
    }
    let system = System {
        model,
        couplings: Couplings::new(&index_set),
        basis,
    };
    let rows = index_set.len();
    let nodes = grid.nodes();
    let mut values = vec![0.0; rows * nodes];
    let mut y = vec![0.0; rows];
    y[0] = model.x0;
    let mut store = |j: usize, y: &[f64]| -> Result<()> {
        for (r, &v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Divergence {
                    index: index_set.get(r).to_string(),
                    time: grid.node(j),
                });
            }
            values[r * nodes + j] = v;
        }
        Ok(())
    };
    store(0, &y)?;
    match options.integrator {
        Integrator::Rk4 => rk4(&system, grid, &mut y, &mut store)?,
        Integrator::DormandPrince { rtol, atol } => {
            dormand_prince(&system, grid, &mut y, rtol, atol, &mut store)?
        }
    }
    Ok(PropagatorSolution {
        grid: *grid,
        index_set,
        model: *model,
        basis: *basis,
        values,
    })
}

fn rk4(
    sys: &System<'_>,
    grid: &TimeGrid,
    y: &mut [f64],
    store: &mut dyn FnMut(usize, &[f64]) -> Result<()>,
) -> Result<()> {
    let n = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for j in 0..grid.steps() {
        let t = grid.node(j);
        let h = grid.node(j + 1) - t;
        sys.eval(t, y, &mut k1);
        axpy_into(&mut tmp, y, 0.5 * h, &k1);
        sys.eval(t + 0.5 * h, &tmp, &mut k2);
        axpy_into(&mut tmp, y, 0.5 * h, &k2);
        sys.eval(t + 0.5 * h, &tmp, &mut k3);
        axpy_into(&mut tmp, y, h, &k3);
        sys.eval(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        store(j + 1, y)?;
    }
    Ok(())
}

fn axpy_into(out: &mut [f64], y: &[f64], h: f64, k: &[f64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + h * ki;
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn dormand_prince(
    sys: &System<'_>,
    grid: &TimeGrid,
    y: &mut [f64],
    rtol: f64,
    atol: f64,
    store: &mut dyn FnMut(usize, &[f64]) -> Result<()>,
) -> Result<()> {
    let n = y.len();
    let horizon = grid.horizon();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut t = 0.0;
    let mut h = grid.dt();
    let mut next_node = 1;
    sys.eval(t, y, &mut k[0]);
    let mut rejected_in_a_row = 0;
    while next_node <= grid.steps() {
        h = h.min(horizon - t);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (r, kr) in k.iter().enumerate().take(s) {
                    acc += h * A[s][r] * kr[i];
                }
                stage[i] = acc;
            }
            let (_, tail) = k.split_at_mut(s);
            sys.eval(t + C[s] * h, &stage, &mut tail[0]);
        }
        // The seventh stage is evaluated at the fifth-order solution.
        y_new.copy_from_slice(&stage);
        let mut err = 0.0;
        for i in 0..n {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
            err += (e / scale).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            rejected_in_a_row += 1;
            if rejected_in_a_row > 50 || h < 1e-14 * horizon {
                let r = y_new.iter().position(|v| !v.is_finite()).unwrap_or(0);
                return Err(Error::Divergence {
                    index: format!("row {r}"),
                    time: t,
                });
            }
            h *= 0.1;
            continue;
        }
        if err <= 1.0 {
            rejected_in_a_row = 0;
            let t_new = if horizon - (t + h) < 1e-12 * horizon { horizon } else { t + h };
            while next_node <= grid.steps() && grid.node(next_node) <= t_new + 1e-12 * horizon {
                let tn = grid.node(next_node);
                if (tn - t_new).abs() <= 1e-12 * horizon {
                    store(next_node, &y_new)?;
                } else {
                    hermite_interp(t, h, y, &k[0], &y_new, &k[6], tn, &mut out);
                    store(next_node, &out)?;
                }
                next_node += 1;
            }
            y.copy_from_slice(&y_new);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            t = t_new;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if err > 1.0 && h < 1e-14 * horizon {
            return Err(Error::Divergence {
                index: "step size underflow".to_string(),
                time: t,
            });
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn hermite_interp(
    t0: f64,
    h: f64,
    y0: &[f64],
    f0: &[f64],
    y1: &[f64],
    f1: &[f64],
    t: f64,
    out: &mut [f64],
) {
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    for i in 0..out.len() {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
}

/// Constants of the mean-square truncation bound. They depend on the
/// Lipschitz constant of the model and must be supplied by the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorConstants {
    pub c1: f64,
    pub c2: f64,
    pub kappa: f64,
}

/// Upper bound on `E|X(T) - X^{p,L}_T|^2`:
///
/// ```text
/// C1 (1 + x0^2) e^{(C1 + kappa^2) T} (kappa^2 T)^{p+1} / (p+1)!
///   + C2 (1 + x0^2) (T^4 / L) e^{C2 T}
/// ```
pub fn wce_error_bound(p: u32, l: usize, horizon: f64, x0: f64, k: ErrorConstants) -> Result<f64> {
    if !(k.c1 > 0.0 && k.c2 > 0.0 && k.kappa > 0.0) {
        return Err(Error::Argument("error bound constants must be positive".into()));
    }
    if l == 0 {
        return Err(Error::range("L", l, ">= 1"));
    }
    let amp = 1.0 + x0 * x0;
    let k2t = k.kappa * k.kappa * horizon;
    // (k2t)^{p+1} / (p+1)! accumulated term by term to avoid overflow.
    let chaos_tail = (1..=p + 1).fold(1.0, |acc, i| acc * k2t / f64::from(i));
    let first = k.c1 * amp * ((k.c1 + k.kappa * k.kappa) * horizon).exp() * chaos_tail;
    let second = k.c2 * amp * horizon.powi(4) / l as f64 * (k.c2 * horizon).exp();
    Ok(first + second)
}
