//! Reference bridge samplers: the exact OU bridge, Doob's h-transform for OU
//! and GBM, and the Bladt-Sorensen coupling for OU.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::{BridgePath, BridgeSpec};
use crate::error::{Error, Result};
use crate::models::{ModelKind, SdeModel};
use crate::propagator::TimeGrid;
use crate::rng::{Lane, NormalStream};

/// State a GBM path is moved to when an Euler step leaves `(0, inf)`.
pub const GBM_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineKind {
    ExactOu,
    DoobH {
        /// Euler steps per grid interval.
        #[serde(default = "one")]
        substeps: usize,
    },
    BladtSorensen {
        #[serde(default = "default_attempts")]
        max_attempts: usize,
        /// Euler-Maruyama legs instead of exact OU transitions.
        #[serde(default)]
        euler: bool,
    },
}

fn one() -> usize {
    1
}

fn default_attempts() -> usize {
    10_000
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::ExactOu => "exact_ou",
            BaselineKind::DoobH { .. } => "doob_h",
            BaselineKind::BladtSorensen { .. } => "bladt_sorensen",
        }
    }

    /// Parses `exact_ou`, `doob_h` or `bladt_sorensen` (dashes accepted) with
    /// default options.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "exact_ou" | "exact" => Some(BaselineKind::ExactOu),
            "doob_h" | "doob" => Some(BaselineKind::DoobH { substeps: 1 }),
            "bladt_sorensen" | "bs" => Some(BaselineKind::BladtSorensen {
                max_attempts: default_attempts(),
                euler: false,
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BaselineKind::DoobH { substeps: 0 } => Err(Error::range("doob_h substeps", 0, ">= 1")),
            BaselineKind::BladtSorensen { max_attempts: 0, .. } => {
                Err(Error::range("bladt_sorensen max_attempts", 0, ">= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Errors unless this sampler supports `model`.
    pub fn check_model(&self, model: &SdeModel) -> Result<()> {
        let ok = match (self, model.kind) {
            (BaselineKind::ExactOu, ModelKind::Ou { a, .. }) => a > 0.0,
            (BaselineKind::DoobH { .. }, ModelKind::Ou { a, .. }) => a > 0.0,
            (BaselineKind::DoobH { .. }, ModelKind::Gbm { sigma, .. }) => sigma > 0.0,
            (BaselineKind::BladtSorensen { .. }, ModelKind::Ou { a, .. }) => a > 0.0,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BaselineMismatch {
                baseline: self.name().into(),
                model: model.name().into(),
            })
        }
    }
}

/// A baseline path plus sampler diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSample {
    pub path: BridgePath,
    /// Bladt-Sorensen attempts used (1 for the other samplers).
    pub attempts: usize,
    /// GBM Euler steps that had to be moved back to [`GBM_FLOOR`].
    pub reflections: usize,
}

fn check_spec(spec: &BridgeSpec, grid: &TimeGrid) -> Result<()> {
    if (spec.horizon - grid.horizon()).abs() > 1e-12 * grid.horizon() {
        return Err(Error::Argument(format!(
            "bridge horizon {} differs from grid horizon {}",
            spec.horizon,
            grid.horizon()
        )));
    }
    Ok(())
}

fn ou_params(model: &SdeModel) -> (f64, f64) {
    match model.kind {
        ModelKind::Ou { a, sigma } => (a, sigma),
        _ => unreachable!("checked by check_model"),
    }
}

/// Variance of the OU transition over a step of length `dt`.
fn ou_step_variance(a: f64, sigma: f64, dt: f64) -> f64 {
    sigma * sigma * (-(-2.0 * a * dt).exp_m1()) / (2.0 * a)
}

/// Unconditioned OU path from `start` with exact Gaussian transitions.
fn ou_exact_path(a: f64, sigma: f64, start: f64, grid: &TimeGrid, rng: &mut NormalStream, out: &mut [f64]) {
    out[0] = start;
    for j in 1..grid.nodes() {
        let dt = grid.node(j) - grid.node(j - 1);
        let sd = ou_step_variance(a, sigma, dt).sqrt();
        out[j] = (-a * dt).exp() * out[j - 1] + sd * rng.next_normal();
    }
}

fn ou_euler_path(a: f64, sigma: f64, start: f64, grid: &TimeGrid, rng: &mut NormalStream, out: &mut [f64]) {
    out[0] = start;
    for j in 1..grid.nodes() {
        let dt = grid.node(j) - grid.node(j - 1);
        out[j] = out[j - 1] - a * out[j - 1] * dt + sigma * dt.sqrt() * rng.next_normal();
    }
}

/// Exact OU bridge: an OU path `Y` from `eta` corrected by
/// `(theta - Y(T)) sinh(a t) / sinh(a T)`.
pub fn exact_ou_bridge(a: f64, sigma: f64, spec: &BridgeSpec, grid: &TimeGrid, seed: u64, path: u64) -> Result<BridgePath> {
    if !(a > 0.0) {
        return Err(Error::range("OU rate a", a, "(0, inf)"));
    }
    check_spec(spec, grid)?;
    let mut rng = NormalStream::new(seed, Lane::ExactOu, path);
    let mut y = vec![0.0; grid.nodes()];
    ou_exact_path(a, sigma, spec.eta, grid, &mut rng, &mut y);
    let gap = spec.theta - y[grid.steps()];
    let denom = (a * spec.horizon).sinh();
    for (j, v) in y.iter_mut().enumerate() {
        *v += gap * (a * grid.node(j)).sinh() / denom;
    }
    y[0] = spec.eta;
    y[grid.steps()] = spec.theta;
    Ok(BridgePath {
        grid: *grid,
        values: y,
        spec: *spec,
        seed,
        path,
    })
}

/// `d/dz log p(z, tau -> theta)` for the OU transition density.
pub fn ou_score(a: f64, sigma: f64, z: f64, tau: f64, theta: f64) -> f64 {
    let decay = (-a * tau).exp();
    (theta - z * decay) * decay / ou_step_variance(a, sigma, tau)
}

/// `d/dz log p(z, tau -> theta)` for the lognormal GBM transition density.
pub fn gbm_score(a: f64, sigma: f64, z: f64, tau: f64, theta: f64) -> f64 {
    let s2 = sigma * sigma;
    (theta.ln() - z.ln() - (a - 0.5 * s2) * tau) / (s2 * tau * z)
}

/// Euler-Maruyama for the h-transformed SDE
/// `dz = [f(z) + g(z)^2 d/dz log p(z; T, theta)] dt + g(z) dB` up to the last
/// interior node; the final node is set to `theta`.
pub fn doob_h_bridge(
    model: &SdeModel,
    spec: &BridgeSpec,
    grid: &TimeGrid,
    substeps: usize,
    seed: u64,
    path: u64,
) -> Result<BaselineSample> {
    let kind = BaselineKind::DoobH { substeps };
    kind.validate()?;
    kind.check_model(model)?;
    check_spec(spec, grid)?;
    if let ModelKind::Gbm { .. } = model.kind {
        if !(spec.eta > 0.0 && spec.theta > 0.0) {
            return Err(Error::Argument("GBM bridge endpoints must be positive".into()));
        }
    }
    let mut rng = NormalStream::new(seed, Lane::DoobH, path);
    let mut z = vec![0.0; grid.nodes()];
    z[0] = spec.eta;
    let mut reflections = 0;
    let horizon = spec.horizon;
    let mut x = spec.eta;
    for j in 1..grid.steps() {
        let t0 = grid.node(j - 1);
        let h = (grid.node(j) - t0) / substeps as f64;
        for s in 0..substeps {
            let t = t0 + s as f64 * h;
            let tau = horizon - t;
            let dw = h.sqrt() * rng.next_normal();
            x = match model.kind {
                ModelKind::Ou { a, sigma } => {
                    x + (-a * x + sigma * sigma * ou_score(a, sigma, x, tau, spec.theta)) * h + sigma * dw
                }
                ModelKind::Gbm { a, sigma } => {
                    let pull = x * (spec.theta.ln() - x.ln() - (a - 0.5 * sigma * sigma) * tau) / tau;
                    let next = x + (a * x + pull) * h + sigma * x * dw;
                    if next > 0.0 {
                        next
                    } else {
                        reflections += 1;
                        GBM_FLOOR
                    }
                }
                _ => unreachable!("checked by check_model"),
            };
        }
        z[j] = x;
    }
    z[grid.steps()] = spec.theta;
    Ok(BaselineSample {
        path: BridgePath {
            grid: *grid,
            values: z,
            spec: *spec,
            seed,
            path,
        },
        attempts: 1,
        reflections,
    })
}

/// One coupling attempt: a forward leg from `eta` and a time-reversed leg
/// from `theta`. Returns the spliced path if the legs meet.
fn bladt_sorensen_attempt(
    a: f64,
    sigma: f64,
    spec: &BridgeSpec,
    grid: &TimeGrid,
    euler: bool,
    rng: &mut NormalStream,
    forward: &mut [f64],
    backward: &mut [f64],
) -> Option<Vec<f64>> {
    let leg = if euler { ou_euler_path } else { ou_exact_path };
    leg(a, sigma, spec.eta, grid, rng, forward);
    leg(a, sigma, spec.theta, grid, rng, backward);
    let n = grid.steps();
    let diff = |i: usize| forward[i] - backward[n - i];
    let first = (1..=n).find(|&i| diff(i - 1) * diff(i) <= 0.0)?;
    let mut out: Vec<f64> = (0..=n).map(|i| if i < first { forward[i] } else { backward[n - i] }).collect();
    out[0] = spec.eta;
    out[n] = spec.theta;
    Some(out)
}

/// Bladt-Sorensen coupling for OU. Attempts continue on the path's own
/// stream until the legs cross or `max_attempts` is reached.
pub fn bladt_sorensen_bridge(
    model: &SdeModel,
    spec: &BridgeSpec,
    grid: &TimeGrid,
    max_attempts: usize,
    euler: bool,
    seed: u64,
    path: u64,
) -> Result<BaselineSample> {
    let kind = BaselineKind::BladtSorensen { max_attempts, euler };
    kind.validate()?;
    kind.check_model(model)?;
    check_spec(spec, grid)?;
    let (a, sigma) = ou_params(model);
    let mut rng = NormalStream::new(seed, Lane::BladtSorensen, path);
    let (mut fwd, mut bwd) = (vec![0.0; grid.nodes()], vec![0.0; grid.nodes()]);
    for attempt in 1..=max_attempts {
        if let Some(values) = bladt_sorensen_attempt(a, sigma, spec, grid, euler, &mut rng, &mut fwd, &mut bwd) {
            return Ok(BaselineSample {
                path: BridgePath {
                    grid: *grid,
                    values,
                    spec: *spec,
                    seed,
                    path,
                },
                attempts: attempt,
                reflections: 0,
            });
        }
    }
    Err(Error::RejectionExhausted { attempts: max_attempts })
}

/// Fraction of `attempts` independent single attempts whose legs cross.
pub fn bladt_sorensen_acceptance(
    model: &SdeModel,
    spec: &BridgeSpec,
    grid: &TimeGrid,
    attempts: u64,
    euler: bool,
    seed: u64,
) -> Result<f64> {
    BaselineKind::BladtSorensen { max_attempts: 1, euler }.check_model(model)?;
    check_spec(spec, grid)?;
    let (a, sigma) = ou_params(model);
    let accepted = (0..attempts)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = NormalStream::new(seed, Lane::BladtSorensen, i);
            let (mut fwd, mut bwd) = (vec![0.0; grid.nodes()], vec![0.0; grid.nodes()]);
            bladt_sorensen_attempt(a, sigma, spec, grid, euler, &mut rng, &mut fwd, &mut bwd).is_some()
        })
        .count();
    Ok(accepted as f64 / attempts as f64)
}

/// Samples `paths` with the chosen baseline, in path order.
pub fn sample_baseline(
    kind: &BaselineKind,
    model: &SdeModel,
    spec: &BridgeSpec,
    grid: &TimeGrid,
    seed: u64,
    paths: Range<u64>,
) -> Result<Vec<BaselineSample>> {
    kind.validate()?;
    kind.check_model(model)?;
    paths
        .into_par_iter()
        .map(|p| match *kind {
            BaselineKind::ExactOu => {
                let (a, sigma) = ou_params(model);
                exact_ou_bridge(a, sigma, spec, grid, seed, p).map(|path| BaselineSample {
                    path,
                    attempts: 1,
                    reflections: 0,
                })
            }
            BaselineKind::DoobH { substeps } => doob_h_bridge(model, spec, grid, substeps, seed, p),
            BaselineKind::BladtSorensen { max_attempts, euler } => {
                bladt_sorensen_bridge(model, spec, grid, max_attempts, euler, seed, p)
            }
        })
        .collect()
}

/// Marginal variance of the OU bridge at `t`:
/// `sigma^2 sinh(a t) sinh(a (T - t)) / (a sinh(a T))`.
pub fn ou_bridge_variance(a: f64, sigma: f64, horizon: f64, t: f64) -> f64 {
    sigma * sigma * (a * t).sinh() * (a * (horizon - t)).sinh() / (a * (a * horizon).sinh())
}

/// Marginal mean of the OU bridge at `t`.
pub fn ou_bridge_mean(a: f64, spec: &BridgeSpec, t: f64) -> f64 {
    let big_t = spec.horizon;
    (spec.eta * (a * (big_t - t)).sinh() + spec.theta * (a * t).sinh()) / (a * big_t).sinh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_statistic, moments, SampleSet};

    fn spec(eta: f64, theta: f64) -> BridgeSpec {
        BridgeSpec::new(eta, theta, 1.0).unwrap()
    }

    fn ou_log_density(a: f64, sigma: f64, z: f64, tau: f64, theta: f64) -> f64 {
        let m = z * (-a * tau).exp();
        let v = sigma * sigma * (1.0 - (-2.0 * a * tau).exp()) / (2.0 * a);
        -0.5 * (theta - m).powi(2) / v - 0.5 * (2.0 * std::f64::consts::PI * v).ln()
    }

    fn gbm_log_density(a: f64, sigma: f64, z: f64, tau: f64, theta: f64) -> f64 {
        let mu = z.ln() + (a - 0.5 * sigma * sigma) * tau;
        let v = sigma * sigma * tau;
        -0.5 * (theta.ln() - mu).powi(2) / v - theta.ln() - 0.5 * (2.0 * std::f64::consts::PI * v).ln()
    }

    #[test]
    fn scores_match_finite_differences() {
        let h = 1e-5;
        for (z, tau, theta) in [(0.3, 0.7, 1.0), (-1.2, 0.05, 0.4), (2.0, 0.9, -0.5)] {
            let fd = (ou_log_density(0.5, 1.0, z + h, tau, theta) - ou_log_density(0.5, 1.0, z - h, tau, theta)) / (2.0 * h);
            assert!((fd - ou_score(0.5, 1.0, z, tau, theta)).abs() < 1e-6 * (1.0 + fd.abs()));
        }
        for (z, tau, theta) in [(0.3, 0.7, 1.0), (1.2, 0.05, 0.4), (2.0, 0.9, 0.5)] {
            let fd = (gbm_log_density(0.2, 0.3, z + h, tau, theta) - gbm_log_density(0.2, 0.3, z - h, tau, theta)) / (2.0 * h);
            assert!((fd - gbm_score(0.2, 0.3, z, tau, theta)).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn ou_score_pulls_toward_theta() {
        let s_lo = ou_score(0.5, 1.0, 0.0, 1e-3, 1.0);
        let s_hi = ou_score(0.5, 1.0, 2.0, 1e-3, 1.0);
        assert!(s_lo > 0.0 && s_hi < 0.0);
        assert!(ou_score(0.5, 1.0, 0.0, 0.5, 1.0).is_finite());
    }

    #[test]
    fn exact_bridge_without_noise() {
        let g = TimeGrid::new(1.0, 100).unwrap();
        let s = spec(0.8, 0.5);
        let p = exact_ou_bridge(0.5, 0.0, &s, &g, 1, 0).unwrap();
        for j in 0..=100 {
            let t = g.node(j);
            let want = 0.8 * (-0.5 * t).exp() + (0.5 - 0.8 * (-0.5f64).exp()) * (0.5 * t).sinh() / 0.5f64.sinh();
            assert!((p.values[j] - want).abs() < 1e-12);
            assert!((p.values[j] - ou_bridge_mean(0.5, &s, t)).abs() < 1e-12);
        }
        assert_eq!(p.values[0], 0.8);
        assert_eq!(p.values[100], 0.5);
    }

    #[test]
    fn exact_bridge_marginal() {
        // Exact transitions make the marginal independent of grid size.
        let g = TimeGrid::new(1.0, 10).unwrap();
        let s = spec(0.0, 0.0);
        let xs: Vec<f64> = (0..100_000)
            .map(|p| exact_ou_bridge(0.5, 1.0, &s, &g, 3, p).unwrap().values[5])
            .collect();
        let m = moments(&xs);
        let want = ou_bridge_variance(0.5, 1.0, 1.0, 0.5);
        assert!((m.variance / want - 1.0).abs() < 0.02, "{} vs {want}", m.variance);
        assert!(m.skewness.abs() < 0.05);
        assert!(m.excess_kurtosis.abs() < 0.1);
    }

    #[test]
    fn bridge_variance_agrees_with_conditioning() {
        // Var[X_t | X_T] for a Gaussian pair, computed from the OU covariance.
        let (a, sigma, t) = (0.5f64, 1.0, 0.3);
        let v = |s: f64| sigma * sigma * (1.0 - (-2.0 * a * s).exp()) / (2.0 * a);
        let cov = (-a * (1.0 - t)).exp() * v(t);
        let want = v(t) - cov * cov / v(1.0);
        assert!((ou_bridge_variance(a, sigma, 1.0, t) - want).abs() < 1e-12);
    }

    #[test]
    fn samplers_pin_endpoints() {
        let g = TimeGrid::new(1.0, 200).unwrap();
        let ou = SdeModel::ou(0.5, 1.0, 0.0);
        let gbm = SdeModel::gbm(0.2, 0.3, 0.2);
        for p in 0..50 {
            let d = doob_h_bridge(&ou, &spec(0.0, 2.0), &g, 1, 9, p).unwrap();
            assert_eq!((d.path.values[0], d.path.values[200]), (0.0, 2.0));
            let d = doob_h_bridge(&gbm, &spec(0.2, 0.3), &g, 2, 9, p).unwrap();
            assert_eq!((d.path.values[0], d.path.values[200]), (0.2, 0.3));
            let b = bladt_sorensen_bridge(&ou, &spec(0.0, 1.0), &g, 1000, false, 9, p).unwrap();
            assert_eq!((b.path.values[0], b.path.values[200]), (0.0, 1.0));
            assert!(b.attempts >= 1);
        }
    }

    #[test]
    fn doob_converges_under_refinement() {
        let ou = SdeModel::ou(0.5, 1.0, 0.0);
        let s = spec(0.0, 1.0);
        let coarse = TimeGrid::new(1.0, 1000).unwrap();
        let fine = TimeGrid::new(1.0, 4000).unwrap();
        let n = 4000;
        let a: Vec<f64> = (0..n).map(|p| doob_h_bridge(&ou, &s, &coarse, 1, 21, p).unwrap().path.values[500]).collect();
        let b: Vec<f64> = (0..n).map(|p| doob_h_bridge(&ou, &s, &fine, 1, 21, p).unwrap().path.values[2000]).collect();
        let d = ks_statistic(&SampleSet::new(a, "coarse").unwrap(), &SampleSet::new(b, "fine").unwrap());
        assert!(d < 0.05, "KS d = {d}");
    }

    #[test]
    fn bladt_sorensen_zero_noise_crosses_at_start() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let ou = SdeModel::ou(0.5, 0.0, 0.4);
        let b = bladt_sorensen_bridge(&ou, &spec(0.4, 0.4), &g, 1, false, 0, 0).unwrap();
        assert_eq!(b.attempts, 1);
        assert_eq!(b.path.values[0], 0.4);
        assert!(b.path.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn bladt_sorensen_exhaustion() {
        // Without noise, legs from 0 and from 5 never meet.
        let g = TimeGrid::new(1.0, 10).unwrap();
        let ou = SdeModel::ou(0.5, 0.0, 0.0);
        match bladt_sorensen_bridge(&ou, &spec(0.0, 5.0), &g, 7, false, 0, 0) {
            Err(Error::RejectionExhausted { attempts }) => assert_eq!(attempts, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn acceptance_rate_is_lower_for_distant_endpoints() {
        let g = TimeGrid::new(1.0, 1000).unwrap();
        let ou = SdeModel::ou(0.5, 1.0, 0.0);
        let near = bladt_sorensen_acceptance(&ou, &spec(0.0, 0.0), &g, 10_000, false, 1).unwrap();
        let far = bladt_sorensen_acceptance(&ou, &spec(0.0, 2.0), &g, 10_000, false, 1).unwrap();
        assert!(far < near, "{far} vs {near}");

        let again = bladt_sorensen_acceptance(&ou, &spec(0.0, 2.0), &g, 10_000, false, 2).unwrap();
        let pooled = 0.5 * (far + again);
        let se = (2.0 * pooled * (1.0 - pooled) / 10_000.0).sqrt();
        assert!((far - again).abs() < 3.0 * se, "{far} vs {again}");
    }

    #[test]
    fn mismatches_are_rejected() {
        let gbm = SdeModel::gbm(0.2, 0.3, 1.0);
        let bs = BaselineKind::from_name("bladt-sorensen").unwrap();
        assert!(matches!(bs.check_model(&gbm), Err(Error::BaselineMismatch { .. })));
        assert!(BaselineKind::ExactOu.check_model(&SdeModel::logistic(0.2, 0.7, 0.2)).is_err());
        assert!(BaselineKind::from_name("doob_h").unwrap().check_model(&gbm).is_ok());
        assert!(BaselineKind::from_name("nope").is_none());
    }
}
