//! Third-order Newton optimization with adaptive Levenberg-Marquardt (quadratic)
//! regularization, where every trial step comes from minimizing a cubic Taylor
//! model via a semidefinite-programming subproblem.
//!
//! The crate is organized around the pipeline a single solver iteration walks
//! through:
//!
//! - [`tensor`] — dense symmetric matrices, third-order tensors, contractions,
//!   and finite-difference verification of derivative bundles.
//! - [`cubic`] — the multivariate cubic polynomial, Taylor-model construction,
//!   LM regularization, and the closed-form model-decrease identity.
//! - [`sdp`] — encoding "find the strict local minimizer of a cubic" as a
//!   semidefinite program, driving a conic interior-point backend, and
//!   certifying the extracted minimizer.
//! - [`solver`] — the adaptive outer loop (Simple and Heuristic strategies),
//!   the mixed acceptance ratio, and the regularization updates.
//! - [`baselines`] — gradient descent, damped Newton, Newton-CG, L-BFGS,
//!   unregularized third-order Newton, and a cubic-regularized Newton method,
//!   all sharing the solver's run/ledger schema.
//! - [`problems`] — test functions with analytic derivatives through order
//!   three, domain boxes, and known minimizers.
//! - [`diagnostics`] — estimates of the theoretical constants along a run and
//!   empirical checks of the corresponding bounds.

// Validation guards use `!(x > 0.0)` deliberately so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

// Force linkage of the system BLAS/LAPACK used by the conic backend.
use openblas_src as _;

pub mod baselines;
pub mod cubic;
pub mod diagnostics;
pub mod problems;
pub mod sdp;
pub mod solver;
pub mod tensor;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("conic backend failure: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, Error>;
