//! The four scalar SDE models and the right-hand sides of their propagator
//! systems.
//!
//! Every propagator row `m` evolves as
//!
//! ```text
//! dX_m/dt = f_m(X) + sum_j sqrt(m_j) e_j(t) sigma_{m^-(j)}(X)
//! ```
//!
//! with `X_0(0) = x0` and `X_m(0) = 0` otherwise. For the two nonlinear models
//! the drift and diffusion are applied coefficient by coefficient (a closure,
//! not the exact projection `E[f(X) xi_m]`).

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::multiindex::IndexSet;

/// Form of the Stratonovich-to-Ito drift correction in the protein model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ItoCorrection {
    /// `sigma X (1-X)(1-2X)`.
    #[default]
    LinearSigma,
    /// `(sigma^2 / 2) X (1-X)(1-2X)`, the textbook conversion.
    HalfSigmaSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ModelKind {
    /// `dX = -a X dt + sigma dB`
    Ou { a: f64, sigma: f64 },
    /// `dX = a X dt + sigma X dB`
    Gbm { a: f64, sigma: f64 },
    /// `dX = a X (1-X) dt + sigma X dB`
    Logistic { a: f64, sigma: f64 },
    /// Ito form of `dX = [1 - X + lambda X(1-X)] dt + sigma X(1-X) o dB`.
    ProteinKinetic {
        lambda: f64,
        sigma: f64,
        #[serde(default)]
        ito_correction: ItoCorrection,
    },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Ou { .. } => "ou",
            ModelKind::Gbm { .. } => "gbm",
            ModelKind::Logistic { .. } => "logistic",
            ModelKind::ProteinKinetic { .. } => "protein_kinetic",
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            ModelKind::Ou { sigma, .. }
            | ModelKind::Gbm { sigma, .. }
            | ModelKind::Logistic { sigma, .. }
            | ModelKind::ProteinKinetic { sigma, .. } => sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeModel {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub x0: f64,
}

impl SdeModel {
    pub fn ou(a: f64, sigma: f64, x0: f64) -> Self {
        SdeModel {
            kind: ModelKind::Ou { a, sigma },
            x0,
        }
    }

    pub fn gbm(a: f64, sigma: f64, x0: f64) -> Self {
        SdeModel {
            kind: ModelKind::Gbm { a, sigma },
            x0,
        }
    }

    pub fn logistic(a: f64, sigma: f64, x0: f64) -> Self {
        SdeModel {
            kind: ModelKind::Logistic { a, sigma },
            x0,
        }
    }

    pub fn protein(lambda: f64, sigma: f64, x0: f64) -> Self {
        SdeModel {
            kind: ModelKind::ProteinKinetic {
                lambda,
                sigma,
                ito_correction: ItoCorrection::LinearSigma,
            },
            x0,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Ito drift `f(x)`.
    pub fn drift(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Ou { a, .. } => -a * x,
            ModelKind::Gbm { a, .. } => a * x,
            ModelKind::Logistic { a, .. } => a * x * (1.0 - x),
            ModelKind::ProteinKinetic { .. } => 1.0 + protein_polynomial(&self.kind, x),
        }
    }

    /// Diffusion coefficient `sigma(x)`.
    pub fn diffusion(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Ou { sigma, .. } => sigma,
            ModelKind::Gbm { sigma, .. } | ModelKind::Logistic { sigma, .. } => sigma * x,
            ModelKind::ProteinKinetic { sigma, .. } => sigma * x * (1.0 - x),
        }
    }

    /// Derivative of a single propagator row. Row 0 must be the zero index.
    pub fn row_rhs(
        &self,
        row: usize,
        t: f64,
        coeffs: &[f64],
        couplings: &Couplings,
        basis: &BasisSpec,
    ) -> f64 {
        let x = coeffs[row];
        let links = couplings.row(row);
        let forcing = |g: &dyn Fn(f64) -> f64| -> f64 {
            links
                .iter()
                .map(|c| c.weight * basis.value(c.coord, t) * g(coeffs[c.parent]))
                .sum::<f64>()
        };
        match self.kind {
            ModelKind::Ou { a, sigma } => {
                // sigma_m = sigma * 1{m = 0}: only singletons are forced.
                let f: f64 = links
                    .iter()
                    .filter(|c| c.parent == 0)
                    .map(|c| c.weight * basis.value(c.coord, t))
                    .sum();
                -a * x + sigma * f
            }
            ModelKind::Gbm { a, sigma } => {
                if row == 0 {
                    return a * x;
                }
                a * x + sigma * forcing(&|p| p)
            }
            ModelKind::Logistic { a, sigma } => {
                if row == 0 {
                    return a * x * (1.0 - x);
                }
                a * x * (1.0 - x) + sigma * forcing(&|p| p)
            }
            ModelKind::ProteinKinetic { sigma, .. } => {
                let poly = protein_polynomial(&self.kind, x);
                if row == 0 {
                    return 1.0 + poly;
                }
                poly + sigma * forcing(&|p| p * (1.0 - p))
            }
        }
    }

    /// Derivatives of every row.
    pub fn rhs(
        &self,
        t: f64,
        coeffs: &[f64],
        couplings: &Couplings,
        basis: &BasisSpec,
        out: &mut [f64],
    ) {
        for (row, o) in out.iter_mut().enumerate() {
            *o = self.row_rhs(row, t, coeffs, couplings, basis);
        }
    }
}

/// The non-constant part of the protein drift,
/// `(lambda + c - 1) X - (lambda + 3c) X^2 + 2c X^3`, where `c` is the
/// coefficient of the Ito correction.
fn protein_polynomial(kind: &ModelKind, x: f64) -> f64 {
    let ModelKind::ProteinKinetic {
        lambda,
        sigma,
        ito_correction,
    } = *kind
    else {
        unreachable!("protein polynomial on a non-protein model")
    };
    let c = match ito_correction {
        ItoCorrection::LinearSigma => sigma,
        ItoCorrection::HalfSigmaSquared => 0.5 * sigma * sigma,
    };
    (lambda + c - 1.0) * x - (lambda + 3.0 * c) * x * x + 2.0 * c * x * x * x
}

/// Link from row `m` to its parent row `m^-(coord)`, weighted by `sqrt(m_coord)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub coord: usize,
    pub weight: f64,
    pub parent: usize,
}

/// Parent links for every row of an index set, stored flat.
///
/// Parents that fall outside the index set are dropped, which is the
/// truncation of the expansion.
#[derive(Debug, Clone)]
pub struct Couplings {
    offsets: Vec<usize>,
    links: Vec<Coupling>,
    orders: Vec<u32>,
}

impl Couplings {
    pub fn new(set: &IndexSet) -> Self {
        let mut offsets = Vec::with_capacity(set.len() + 1);
        let mut links = Vec::new();
        offsets.push(0);
        for m in set.iter() {
            for &(k, mk) in m.entries() {
                let parent = m.decrement(k).expect("coordinate from the index itself");
                if let Some(p) = set.position(&parent) {
                    links.push(Coupling {
                        coord: k,
                        weight: f64::from(mk).sqrt(),
                        parent: p,
                    });
                }
            }
            offsets.push(links.len());
        }
        let orders = set.iter().map(|m| m.order()).collect();
        Couplings {
            offsets,
            links,
            orders,
        }
    }

    pub fn row(&self, row: usize) -> &[Coupling] {
        &self.links[self.offsets[row]..self.offsets[row + 1]]
    }

    pub fn order(&self, row: usize) -> u32 {
        self.orders[row]
    }

    pub fn rows(&self) -> usize {
        self.orders.len()
    }
}

/// Propagator right-hand side for the OU model.
pub fn rhs_ou(
    a: f64,
    sigma: f64,
    t: f64,
    coeffs: &[f64],
    couplings: &Couplings,
    basis: &BasisSpec,
    out: &mut [f64],
) {
    SdeModel::ou(a, sigma, 0.0).rhs(t, coeffs, couplings, basis, out)
}

/// Propagator right-hand side for geometric Brownian motion.
pub fn rhs_gbm(
    a: f64,
    sigma: f64,
    t: f64,
    coeffs: &[f64],
    couplings: &Couplings,
    basis: &BasisSpec,
    out: &mut [f64],
) {
    SdeModel::gbm(a, sigma, 0.0).rhs(t, coeffs, couplings, basis, out)
}

/// Propagator right-hand side for the multiplicative logistic model.
pub fn rhs_logistic(
    a: f64,
    sigma: f64,
    t: f64,
    coeffs: &[f64],
    couplings: &Couplings,
    basis: &BasisSpec,
    out: &mut [f64],
) {
    SdeModel::logistic(a, sigma, 0.0).rhs(t, coeffs, couplings, basis, out)
}

/// Propagator right-hand side for the protein kinetic model.
#[allow(clippy::too_many_arguments)]
pub fn rhs_protein(
    lambda: f64,
    sigma: f64,
    ito_correction: ItoCorrection,
    t: f64,
    coeffs: &[f64],
    couplings: &Couplings,
    basis: &BasisSpec,
    out: &mut [f64],
) {
    let model = SdeModel {
        kind: ModelKind::ProteinKinetic {
            lambda,
            sigma,
            ito_correction,
        },
        x0: 0.0,
    };
    model.rhs(t, coeffs, couplings, basis, out)
}
