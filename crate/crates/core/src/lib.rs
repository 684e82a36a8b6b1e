//! Classical extensions and classical (frame) representations of
//! finite-dimensional quantum mechanics.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`] and [`quantum`] hold the matrix kernels and validated quantum
//!   objects; [`sampling`] draws them reproducibly from a seed.
//! - [`extension`]: classical states as atomic measures over pure states,
//!   with the reduction map and induced (fuzzy) classical observables.
//! - [`representation`]: minimal informationally complete frames,
//!   pseudo-distributions, effect expansions and the uniform POVM.
//! - [`update`]: collapse split into Bayesian selection plus readjustment,
//!   and Bayesian updating followed by disturbance or smearing.
//! - [`experiments`]: CHSH correlations and dispersion demonstrations.

pub mod error;
pub mod experiments;
pub mod extension;
pub mod linalg;
pub mod quantum;
pub mod representation;
pub mod sampling;
pub mod tol;
pub mod update;
pub mod wire;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use quantum::{
    apply_operation, born_probability, DensityOperator, DiscretePovm, Effect, KrausOperation,
    PureState,
};
