//! Primal-dual majorization-minimization (PDMM) for Poisson phase retrieval.
//!
//! The crate recovers a complex signal `x` from photon counts
//! `y_i ~ Poisson(|a_i^H x|^2 + b_i)` by minimizing the negative
//! log-likelihood with a double-loop MM scheme: an outer loop over the
//! primal iterate and an inner loop over a non-negative dual vector, both
//! with closed-form updates. An l1-regularized variant handles
//! `lambda * ||T x||_1` penalties such as anisotropic total variation.
//!
//! Module map:
//!
//! - [`linops`]: sensing operators (dense and masked-DFT) with the
//!   pseudo-inverse, projection and Gram solves the solvers need.
//! - [`model`]: the Poisson measurement model, objective and generators.
//! - [`init`]: spectral initialization and dual initialization.
//! - [`pdmm`]: the unregularized solver.
//! - [`regularized`]: regularizer matrices and the l1-regularized solver.
//! - [`eval`]: phase-aligned NRMSE and autocorrelation metrics.
//! - [`experiment`]: Monte-Carlo sweeps, CSV output and the image pipeline
//!   driven by the `pdmm` binary.
//! - [`pgm`]: PGM (P2/P5) image reading and writing.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod experiment;
pub mod init;
pub mod linops;
pub mod model;
pub mod pdmm;
pub mod pgm;
pub mod regularized;

pub use error::{Error, Result};
pub use linops::{DenseOperator, MaskedDftOperator, SensingOperator};
pub use model::{GroundTruth, PoissonProblem};
pub use pdmm::{SolveStatus, SolveTrace, SolverConfig};
pub use regularized::{RegularizerKind, RegularizerMatrix};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

/// Complex column vector.
pub type CVector = DVector<Complex64>;
/// Real column vector.
pub type RVector = DVector<f64>;
