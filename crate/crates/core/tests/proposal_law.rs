//! The chaos coefficients of the proposal bridge against a direct Monte Carlo
//! simulation of `Y(t) = eta + (theta - eta) t/T + (T - t) int_0^t dX/(T - s)`
//! with Euler-Maruyama paths of `X`.

use wce_bridge::experiment::{build_coefficients, ExperimentConfig, ModelConfig};
use wce_bridge::rng::{Lane, NormalStream};
use wce_bridge::stats::moments;
use wce_bridge::{ou_bridge_variance, sample_bridges};

const PATHS: u64 = 20_000;
const STEPS: usize = 2000;

/// Direct samples of `Y(T/2)` with `T = 1`.
fn direct_midpoint(cfg: &ExperimentConfig) -> Vec<f64> {
    let sde = cfg.sde();
    let dt = 1.0 / STEPS as f64;
    (0..PATHS)
        .map(|p| {
            let mut rng = NormalStream::new(cfg.seed, Lane::Custom(40), p);
            let (mut x, mut q) = (sde.x0, 0.0);
            for i in 0..STEPS / 2 {
                let dx = sde.drift(x) * dt + sde.diffusion(x) * dt.sqrt() * rng.next_normal();
                x += dx;
                q += dx / (1.0 - (i + 1) as f64 * dt);
            }
            cfg.eta + 0.5 * (cfg.theta - cfg.eta) + 0.5 * q
        })
        .collect()
}

fn check(model: &str, eta: f64, theta: f64) {
    let cfg = ExperimentConfig {
        model: ModelConfig::from_name(model).unwrap(),
        eta,
        theta,
        l: 1000,
        seed: 12,
        ..ExperimentConfig::default()
    };
    let (_, coeffs) = build_coefficients(&cfg, cfg.l).unwrap();
    let direct = moments(&direct_midpoint(&cfg));
    let (mean, var) = (coeffs.mean_path()[500], coeffs.variance_at(500));
    let se_mean = (direct.variance / PATHS as f64).sqrt();
    let se_var = direct.variance * (2.0 / (PATHS - 1) as f64).sqrt();
    assert!(
        (direct.mean - mean).abs() < 4.0 * se_mean + 2e-3 * mean.abs(),
        "{model} mean: direct {} vs chaos {mean}",
        direct.mean
    );
    assert!(
        (direct.variance - var).abs() < 4.0 * se_var + 2e-3 * var,
        "{model} variance: direct {} vs chaos {var}",
        direct.variance
    );
}

#[test]
fn ou_coefficients_match_direct_simulation() {
    check("ou", 0.0, 0.0);
    check("ou", 0.8, 0.5);
}

#[test]
fn gbm_coefficients_match_direct_simulation() {
    check("gbm", 1.0, 1.0);
    check("gbm", 0.2, 0.3);
}

#[test]
fn logistic_coefficients_match_direct_simulation() {
    check("logistic", 0.2, 0.3);
}

#[test]
fn ou_proposal_variance_differs_from_exact_bridge() {
    // The proposal law is absolutely continuous with respect to the bridge
    // law but not equal to it; at a = 0.5 its midpoint variance is about 18%
    // smaller.
    let cfg = ExperimentConfig {
        l: 1000,
        ..ExperimentConfig::default()
    };
    let (_, coeffs) = build_coefficients(&cfg, cfg.l).unwrap();
    let exact = ou_bridge_variance(0.5, 1.0, 1.0, 0.5);
    let proposal = coeffs.variance_at(500);
    assert!((exact - 0.244_918).abs() < 1e-6);
    assert!(proposal < 0.85 * exact, "{proposal} vs {exact}");
}

#[test]
fn ou_mean_consistency() {
    // Empirical mean of 1e4 bridges within 3 standard errors of Y_0.
    let cfg = ExperimentConfig {
        theta: 1.0,
        l: 100,
        seed: 4,
        ..ExperimentConfig::default()
    };
    let (_, coeffs) = build_coefficients(&cfg, cfg.l).unwrap();
    let ys: Vec<f64> = sample_bridges(&coeffs, cfg.seed, 0..10_000).iter().map(|p| p.values[500]).collect();
    let m = moments(&ys);
    let se = (m.variance / 1e4).sqrt();
    assert!((m.mean - coeffs.mean_path()[500]).abs() < 3.0 * se);
}

#[test]
fn ou_sample_variance_tracks_coefficients() {
    // 1000 paths at L = 1000: sample variance within 10% of sum_m Y_m^2.
    let cfg = ExperimentConfig {
        l: 1000,
        seed: 8,
        ..ExperimentConfig::default()
    };
    let (_, coeffs) = build_coefficients(&cfg, cfg.l).unwrap();
    let ys: Vec<f64> = sample_bridges(&coeffs, cfg.seed, 0..1000).iter().map(|p| p.values[500]).collect();
    let v = moments(&ys).variance;
    assert!((v / coeffs.variance_at(500) - 1.0).abs() < 0.1, "{v}");
}
