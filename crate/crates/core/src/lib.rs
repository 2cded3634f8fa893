//! Numerical toolkit for Hamiltonian flows, eikonal phases, stationary phase
//! and spectral multipliers on sub-Riemannian model manifolds.

pub mod eikonal;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod models;
pub mod mult;
pub mod ode;
pub mod quad;
pub mod oscint;
pub mod varjac;

pub use error::{Error, Result};
pub use models::{register_builtin, CotangentPoint, ModelSpec};
