//! Orthonormal sine basis of `L^2(0, T)`:
//! `e_j(t) = sqrt(2/T) sin(j pi t / T)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    horizon: f64,
    count: usize,
}

impl BasisSpec {
    pub fn new(horizon: f64, count: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::range("horizon T", horizon, "(0, inf)"));
        }
        Ok(BasisSpec { horizon, count })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of retained basis functions `L`.
    pub fn count(&self) -> usize {
        self.count
    }

    fn check(&self, j: usize, t: f64) -> Result<()> {
        if j == 0 || j > self.count {
            return Err(Error::range("basis index", j, format!("1..={}", self.count)));
        }
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::range("time", t, format!("[0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// `e_j(t)` with range checks.
    pub fn eval(&self, j: usize, t: f64) -> Result<f64> {
        self.check(j, t)?;
        Ok(self.value(j, t))
    }

    /// `e_j(t)` without range checks, for inner loops.
    #[inline]
    pub fn value(&self, j: usize, t: f64) -> f64 {
        (2.0 / self.horizon).sqrt() * (j as f64 * PI * t / self.horizon).sin()
    }

    /// `int_0^t e_j(s) ds`, closed form.
    pub fn integral(&self, j: usize, t: f64) -> Result<f64> {
        self.check(j, t)?;
        let w = j as f64 * PI / self.horizon;
        Ok((2.0 / self.horizon).sqrt() * (1.0 - (w * t).cos()) / w)
    }

    /// `int_0^T e_i e_j dt` by composite Gauss-Legendre quadrature.
    pub fn inner_product(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i, 0.0)?;
        self.check(j, 0.0)?;
        let panels = 8 + 4 * (i + j);
        Ok(integrate(
            |t| self.value(i, t) * self.value(j, t),
            0.0,
            self.horizon,
            panels,
        ))
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite 10-point Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(10);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let panel: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * f(mid + 0.5 * h * x))
            .sum();
        total += 0.5 * h * panel;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let b = BasisSpec::new(1.0, 4).unwrap();
        assert_eq!(b.eval(1, 0.0).unwrap(), 0.0);
        assert!((b.eval(2, 0.25).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((b.eval(1, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn eval_range_errors() {
        let b = BasisSpec::new(1.0, 4).unwrap();
        assert!(b.eval(0, 0.5).is_err());
        assert!(b.eval(5, 0.5).is_err());
        assert!(b.eval(1, 1.5).is_err());
        assert!(BasisSpec::new(0.0, 1).is_err());
    }

    #[test]
    fn orthonormal_up_to_twelve() {
        for horizon in [1.0, 2.0] {
            let b = BasisSpec::new(horizon, 12).unwrap();
            for i in 1..=12 {
                for j in 1..=12 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    let got = b.inner_product(i, j).unwrap();
                    assert!((got - want).abs() < 1e-9, "({i},{j}) T={horizon}: {got}");
                }
            }
        }
    }

    #[test]
    fn integral_examples() {
        let b = BasisSpec::new(1.0, 2).unwrap();
        assert_eq!(b.integral(1, 0.0).unwrap(), 0.0);
        let want = 2.0 * 2f64.sqrt() / PI;
        assert!((b.integral(1, 1.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.900316).abs() < 1e-6);
        assert!(b.integral(2, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn integral_matches_quadrature() {
        // Deterministic spread of (j, t) pairs.
        let b = BasisSpec::new(1.7, 40).unwrap();
        for n in 0..100u64 {
            let j = 1 + (n * 7919 % 40) as usize;
            let t = b.horizon() * ((n * 104_729 % 1000) as f64 / 999.0);
            let quad = integrate(|s| b.value(j, s), 0.0, t, 4 + 2 * j);
            let closed = b.integral(j, t).unwrap();
            assert!((quad - closed).abs() < 1e-10, "j={j} t={t}: {quad} vs {closed}");
        }
    }

    #[test]
    fn parseval_on_indicator() {
        let b = BasisSpec::new(1.0, 1000).unwrap();
        let s: f64 = (1..=1000).map(|j| b.integral(j, 0.5).unwrap().powi(2)).sum();
        assert!((s - 0.5).abs() < 1e-3, "{s}");
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }
}
