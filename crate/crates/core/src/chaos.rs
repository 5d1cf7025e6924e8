//! Normalized Hermite polynomials and the chaos random variables
//! `xi_m = prod_k H_{m_k}(chi_k)` built from iid standard normals `chi_k`.
//!
//! `H_n` is orthonormal under the standard Gaussian measure, so the family
//! `{xi_m}` is orthonormal in `L^2(Omega)` with no extra factorial weight.

use crate::multiindex::{IndexSet, MultiIndex};
use crate::rng::{Lane, NormalStream};

/// Highest Hermite degree accepted by [`hermite`].
pub const MAX_HERMITE_DEGREE: u32 = 64;

/// Orthonormal Hermite polynomial `H_n(x) = He_n(x) / sqrt(n!)`, evaluated with
/// the recurrence `H_{n+1} = (x H_n - sqrt(n) H_{n-1}) / sqrt(n+1)`.
pub fn hermite(n: u32, x: f64) -> f64 {
    debug_assert!(n <= MAX_HERMITE_DEGREE, "Hermite degree {n} above {MAX_HERMITE_DEGREE}");
    if n == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let next = (x * cur - k.sqrt() * prev) / (k + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// One realization of `chi_1..chi_L`, optionally with `xi_m` evaluated for
/// every row of an index set.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosDraw {
    pub chi: Vec<f64>,
    /// `xi[row]` for the index set passed to [`ChaosDraw::evaluate`]; empty
    /// until then.
    pub xi: Vec<f64>,
    pub seed: u64,
    pub path: u64,
}

impl ChaosDraw {
    /// Fills `xi` for every multi-index of `set`, in row order.
    pub fn evaluate(&mut self, set: &IndexSet) {
        self.xi = set.iter().map(|m| eval_xi(self, m)).collect();
    }
}

/// Draws `chi_1..chi_L` for path `path` of master seed `seed`.
pub fn sample_chi(seed: u64, path: u64, len: usize) -> ChaosDraw {
    let mut chi = vec![0.0; len];
    NormalStream::new(seed, Lane::Chaos, path).fill_normal(&mut chi);
    ChaosDraw {
        chi,
        xi: Vec::new(),
        seed,
        path,
    }
}

/// `xi_m = prod_k H_{m_k}(chi_k)`; the zero index gives exactly 1.
pub fn eval_xi(draw: &ChaosDraw, m: &MultiIndex) -> f64 {
    m.entries().iter().fold(1.0, |acc, &(k, mk)| {
        let x = draw.chi[k - 1];
        acc * if mk == 1 { x } else { hermite(mk, x) }
    })
}
