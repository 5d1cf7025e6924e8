//! Diffusion bridges from a truncated Wiener chaos expansion.
//!
//! The unconditioned SDE `dX = f(X) dt + g(X) dB` is expanded over Hermite
//! functionals of the Gaussians `chi_k = int e_k dB`, which turns it into a
//! deterministic ODE system (the propagator) for the coefficients `X_m(t)`.
//! A linear transform of those coefficients gives the coefficients of a
//! proposal bridge pinned at `(0, eta)` and `(T, theta)`, and every bridge
//! sample afterwards is a weighted sum of precomputed rows.
//!
//! ```
//! use std::sync::Arc;
//! use wce_bridge::{
//!     enumerate_table_a, sample_bridge, solve_propagator, transform_to_bridge, BasisSpec, BridgeSpec,
//!     SdeModel, SolverOptions, TimeGrid,
//! };
//!
//! let set = Arc::new(enumerate_table_a(12, 50));
//! let sol = solve_propagator(
//!     &SdeModel::ou(0.5, 1.0, 0.0),
//!     set,
//!     &BasisSpec::new(1.0, 50).unwrap(),
//!     &TimeGrid::new(1.0, 200).unwrap(),
//!     &SolverOptions::default(),
//! )
//! .unwrap();
//! let coeffs = transform_to_bridge(&sol, &BridgeSpec::new(0.0, 1.0, 1.0).unwrap()).unwrap();
//! let path = sample_bridge(&coeffs, 42, 0);
//! assert_eq!(path.values[0], 0.0);
//! assert_eq!(path.values[200], 1.0);
//! ```

pub mod baselines;
pub mod basis;
pub mod bridge;
pub mod chaos;
pub mod error;
pub mod experiment;
pub mod models;
pub mod multiindex;
pub mod output;
pub mod propagator;
pub mod rng;
pub mod stats;

pub use baselines::{
    bladt_sorensen_acceptance, bladt_sorensen_bridge, doob_h_bridge, exact_ou_bridge, ou_bridge_mean,
    ou_bridge_variance, sample_baseline, BaselineKind, BaselineSample,
};
pub use basis::BasisSpec;
pub use bridge::{
    bridge_from_draw, sample_bridge, sample_bridges, transform_to_bridge, truncated_solution, BridgeCoefficients,
    BridgePath, BridgeSpec,
};
pub use chaos::{eval_xi, hermite, sample_chi, ChaosDraw};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, Overrides};
pub use models::{ItoCorrection, ModelKind, SdeModel};
pub use multiindex::{enumerate_full, enumerate_table_a, IndexScheme, IndexSet, MultiIndex};
pub use propagator::{solve_propagator, Integrator, PropagatorSolution, SolverOptions, TimeGrid};
pub use stats::{ks_two_sample, marginal_at, qq_pairs, KsResult, SampleSet};
