//! Two-sample Kolmogorov-Smirnov test, matched quantiles and moments.

use serde::{Deserialize, Serialize};

use crate::bridge::BridgePath;
use crate::error::{Error, Result};

/// One marginal observation per path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub label: String,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("sample set is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("sample set contains non-finite value {v}")));
        }
        Ok(SampleSet {
            values,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsMethod {
    /// Kolmogorov limit distribution with the effective-size correction.
    #[default]
    Asymptotic,
    /// Exact null distribution by lattice-path counting; both samples must
    /// have fewer than 50 points.
    Exact,
}

/// Largest sample size accepted by [`KsMethod::Exact`].
pub const EXACT_KS_LIMIT: usize = 49;

/// `sup_x |F_a(x) - F_b(x)|` with right-continuous empirical CDFs.
pub fn ks_statistic(a: &SampleSet, b: &SampleSet) -> f64 {
    let (xa, xb) = (a.sorted(), b.sorted());
    let (n, m) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`, clamped to `[0, 1]`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    // The alternating series converges slowly for small lambda, where Q is 1
    // to double precision anyway.
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=1000u32 {
        let k = f64::from(k);
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_two_sample(a: &SampleSet, b: &SampleSet) -> Result<KsResult> {
    ks_two_sample_with(a, b, KsMethod::Asymptotic)
}

pub fn ks_two_sample_with(a: &SampleSet, b: &SampleSet, method: KsMethod) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("KS test needs two nonempty samples".into()));
    }
    let (n, m) = (a.len(), b.len());
    let d = ks_statistic(a, b);
    let p_value = match method {
        KsMethod::Asymptotic => {
            let ne = (n as f64 * m as f64 / (n + m) as f64).sqrt();
            kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)
        }
        KsMethod::Exact => {
            if n > EXACT_KS_LIMIT || m > EXACT_KS_LIMIT {
                return Err(Error::Argument(format!(
                    "exact KS p-value needs n, m <= {EXACT_KS_LIMIT}, got ({n}, {m})"
                )));
            }
            exact_p_value(n, m, d)
        }
    };
    Ok(KsResult { d, p_value, n, m })
}

/// `P(D >= d)` under the null, by counting monotone lattice paths from
/// `(0, 0)` to `(n, m)` that stay strictly inside `|i/n - j/m| < d`.
fn exact_p_value(n: usize, m: usize, d: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    // Attainable statistics are multiples of 1/lcm(n, m); shave rounding.
    let eps = 1e-9 / (n * m) as f64;
    let inside = |i: usize, j: usize| ((i as f64 / n as f64) - (j as f64 / m as f64)).abs() < d - eps;
    let mut row = vec![0.0f64; m + 1];
    for i in 0..=n {
        for j in 0..=m {
            row[j] = if !inside(i, j) {
                0.0
            } else if i == 0 && j == 0 {
                1.0
            } else {
                let up = if i > 0 { row[j] } else { 0.0 };
                let left = if j > 0 { row[j - 1] } else { 0.0 };
                up + left
            };
        }
    }
    let total: f64 = (1..=m).fold(1.0, |acc, k| acc * (n + k) as f64 / k as f64);
    (1.0 - row[m] / total).clamp(0.0, 1.0)
}

/// Type-7 empirical quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(s: &SampleSet, q: f64) -> f64 {
    quantile_sorted(&s.sorted(), q.clamp(0.0, 1.0))
}

/// Matched empirical quantiles at levels `(i - 0.5) / k`, `i = 1..=k`.
pub fn qq_pairs(a: &SampleSet, b: &SampleSet, k: usize) -> Result<Vec<(f64, f64)>> {
    if k < 2 {
        return Err(Error::range("quantile count k", k, ">= 2"));
    }
    let (sa, sb) = (a.sorted(), b.sorted());
    Ok((1..=k)
        .map(|i| {
            let q = (i as f64 - 0.5) / k as f64;
            (quantile_sorted(&sa, q), quantile_sorted(&sb, q))
        })
        .collect())
}

/// Value of every path at time `t`, linear between nodes.
pub fn marginal_at(paths: &[BridgePath], t: f64, label: impl Into<String>) -> Result<SampleSet> {
    let first = paths
        .first()
        .ok_or_else(|| Error::Argument("no paths to take a marginal from".into()))?;
    let horizon = first.grid.horizon();
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::range("marginal time t", t, &format!("[0, {horizon}]")));
    }
    SampleSet::new(paths.iter().map(|p| p.at(t)).collect(), label)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn moments(values: &[f64]) -> Moments {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    Moments {
        mean,
        variance: if values.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 },
        skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
        excess_kurtosis: if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 },
    }
}
