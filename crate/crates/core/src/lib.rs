//! Full-history recursive multilevel Picard (MLP) approximations for
//! McKean-Vlasov SDEs with additive noise and a drift that depends linearly
//! on the law of the solution.
//!
//! - [`rng`]: counter-based randomness addressed by hierarchical indices
//! - [`brownian`]: Brownian paths on nested uniform grids
//! - [`models`]: problem instances, drifts and analytic oracles
//! - [`mlp`]: the estimator, cost instrumentation and L² error estimates
//! - [`recursion`]: Gronwall-type recursions, cost recursion and bounds
//! - [`particle`]: interacting-particle Euler reference solver
//! - [`harness`]: experiment runner behind the `mlp-harness` binary

pub mod brownian;
pub mod error;
pub mod harness;
pub mod ledger;
pub mod mlp;
pub mod models;
mod parallel;
pub mod particle;
pub mod recursion;
pub mod rng;

pub use brownian::{snap, GridPath, GridPoint};
pub use error::{Error, Result};
pub use ledger::{CostLedger, CostTally};
pub use mlp::{l2_error_estimate, mlp_evaluate, realize_estimate, MlpCall, Realization};
pub use models::{Builtin, BuiltinParams, DriftModel, OracleKind, Problem};
pub use rng::{IndexKey, Tag};
