//! Sensing operators.
//!
//! [`SensingOperator`] wraps either an explicit complex matrix
//! ([`DenseOperator`]) or a matrix-free masked oversampled DFT
//! ([`MaskedDftOperator`]). Both backends precompute what the solvers reuse
//! every iteration: a factorization of the Gram matrix `A^H A` and, for the
//! dense case, the pseudo-inverse.

mod dense;
mod masked;
mod power;

pub use dense::{DenseOperator, DEFAULT_PROJECTION_CAP};
pub use masked::MaskedDftOperator;
pub use power::{dominant_eigenpair, max_eig_hermitian, EigenEstimate, PowerIterationOptions};

use crate::error::{check_len, Result};
use crate::{CVector, Complex64, Error};

#[derive(Debug, Clone)]
pub enum SensingOperator {
    Dense(DenseOperator),
    MaskedDft(MaskedDftOperator),
}

impl From<DenseOperator> for SensingOperator {
    fn from(op: DenseOperator) -> Self {
        SensingOperator::Dense(op)
    }
}

impl From<MaskedDftOperator> for SensingOperator {
    fn from(op: MaskedDftOperator) -> Self {
        SensingOperator::MaskedDft(op)
    }
}

impl SensingOperator {
    /// Number of measurements (`N`, or `M * N` for the masked backend).
    pub fn rows(&self) -> usize {
        match self {
            SensingOperator::Dense(op) => op.rows(),
            SensingOperator::MaskedDft(op) => op.rows(),
        }
    }

    /// Length of the unknown signal.
    pub fn cols(&self) -> usize {
        match self {
            SensingOperator::Dense(op) => op.cols(),
            SensingOperator::MaskedDft(op) => op.cols(),
        }
    }

    /// `A x`.
    pub fn apply(&self, x: &CVector) -> Result<CVector> {
        check_len("apply", self.cols(), x.len())?;
        Ok(self.apply_unchecked(x))
    }

    /// `A^H v`.
    pub fn adjoint_apply(&self, v: &CVector) -> Result<CVector> {
        check_len("adjoint_apply", self.rows(), v.len())?;
        Ok(self.adjoint_unchecked(v))
    }

    /// Least-squares solution `(A^H A)^{-1} A^H v`.
    pub fn pinv_apply(&self, v: &CVector) -> Result<CVector> {
        check_len("pinv_apply", self.rows(), v.len())?;
        Ok(self.pinv_unchecked(v))
    }

    /// Orthogonal projection onto the range of `A`.
    pub fn projection_apply(&self, v: &CVector) -> Result<CVector> {
        check_len("projection_apply", self.rows(), v.len())?;
        Ok(self.projection_unchecked(v))
    }

    /// `(A^H A)^{-1} v`.
    pub fn gram_solve(&self, v: &CVector) -> Result<CVector> {
        check_len("gram_solve", self.cols(), v.len())?;
        Ok(self.gram_solve_unchecked(v))
    }

    /// The same operator multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<SensingOperator> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "operator scale factor must be positive and finite, got {factor}"
            )));
        }
        Ok(match self {
            SensingOperator::Dense(op) => SensingOperator::Dense(op.scaled(factor)?),
            SensingOperator::MaskedDft(op) => SensingOperator::MaskedDft(op.scaled(factor)),
        })
    }

    pub(crate) fn apply_unchecked(&self, x: &CVector) -> CVector {
        match self {
            SensingOperator::Dense(op) => op.apply_unchecked(x),
            SensingOperator::MaskedDft(op) => op.apply_unchecked(x),
        }
    }

    pub(crate) fn adjoint_unchecked(&self, v: &CVector) -> CVector {
        match self {
            SensingOperator::Dense(op) => op.adjoint_unchecked(v),
            SensingOperator::MaskedDft(op) => op.adjoint_unchecked(v),
        }
    }

    pub(crate) fn pinv_unchecked(&self, v: &CVector) -> CVector {
        match self {
            SensingOperator::Dense(op) => op.pinv_unchecked(v),
            SensingOperator::MaskedDft(op) => op.pinv_unchecked(v),
        }
    }

    pub(crate) fn projection_unchecked(&self, v: &CVector) -> CVector {
        match self {
            SensingOperator::Dense(op) => op.projection_unchecked(v),
            SensingOperator::MaskedDft(op) => op.apply_unchecked(&op.pinv_unchecked(v)),
        }
    }

    pub(crate) fn gram_solve_unchecked(&self, v: &CVector) -> CVector {
        match self {
            SensingOperator::Dense(op) => op.gram_solve_unchecked(v),
            SensingOperator::MaskedDft(op) => op.gram_solve_unchecked(v),
        }
    }
}

/// `<u, v> = u^H v`.
pub fn inner(u: &CVector, v: &CVector) -> Complex64 {
    u.dotc(v)
}
