//! Initial points for the solvers.
//!
//! The primal start is the leading eigenvector of `A^H diag(y - b) A`,
//! rescaled by the least-squares factor that best matches `|A x|^2` to
//! `y - b`. The dual start evaluates the inner maximizer `y / (|A x0|^2 + b)`.

use log::warn;

use crate::error::Result;
use crate::linops::{dominant_eigenpair, PowerIterationOptions};
use crate::model::PoissonProblem;
use crate::{CVector, Complex64, Error, RVector};

/// Lower clamp applied to dual entries of zero-count coordinates.
pub const DEFAULT_Z_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    /// Unit-norm direction.
    pub direction: CVector,
    /// Signed Rayleigh quotient of the dominant eigenpair.
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SpectralEstimate {
    /// The dominant eigenvalue of `A^H diag(y - b) A` was negative, so the
    /// direction maximizes magnitude rather than the signed eigenvalue.
    pub fn negative_eigenvalue(&self) -> bool {
        self.eigenvalue < 0.0
    }
}

#[derive(Debug, Clone)]
pub struct InitResult {
    pub x0: CVector,
    pub alpha: f64,
    pub z0: RVector,
    pub power_iters_used: usize,
    pub spectral_converged: bool,
    pub negative_eigenvalue: bool,
}

/// Power iteration on `v -> A^H ((y - b) o (A v))`.
pub fn spectral_initialize(problem: &PoissonProblem, opts: PowerIterationOptions) -> SpectralEstimate {
    let weights: RVector = &problem.y - &problem.b;
    let op = &problem.op;
    let est = dominant_eigenpair(
        op.cols(),
        |v| {
            let av = op.apply_unchecked(v);
            let weighted = av.zip_map(&weights, |a, w| a * w);
            op.adjoint_unchecked(&weighted)
        },
        opts,
    );
    if !est.converged {
        warn!("spectral initialization stopped after {} iterations", est.iterations);
    }
    if est.value < 0.0 {
        warn!("dominant eigenvalue of the spectral matrix is negative ({})", est.value);
    }
    SpectralEstimate {
        direction: est.vector,
        eigenvalue: est.value,
        iterations: est.iterations,
        converged: est.converged,
    }
}

/// `sqrt((y - b)^T |A x|^2) / ||A x||_4^2`, the minimizer over real `alpha`
/// of `|| y - b - |alpha A x|^2 ||_2`. A negative correlation is clamped to
/// zero.
pub fn scale_factor(problem: &PoissonProblem, x_tilde: &CVector) -> Result<f64> {
    let ax = problem.op.apply(x_tilde)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((a, &y), &b) in ax.iter().zip(problem.y.iter()).zip(problem.b.iter()) {
        let q = a.norm_sqr();
        num += (y - b) * q;
        den += q * q;
    }
    if !(den > 0.0) {
        return Err(Error::Degenerate("A x is zero in the scale factor".into()));
    }
    if num < 0.0 {
        warn!("negative intensity correlation {num} in the scale factor; clamping to zero");
        num = 0.0;
    }
    Ok(num.sqrt() / den.sqrt())
}

/// `z_i = y_i / (|a_i^H x0|^2 + b_i)`, with zero counts lifted to `z_floor`.
pub fn dual_initialize(problem: &PoissonProblem, x0: &CVector, z_floor: f64) -> Result<RVector> {
    let ax = problem.op.apply(x0)?;
    let mut bad = Vec::new();
    let z = RVector::from_iterator(
        ax.len(),
        ax.iter()
            .zip(problem.y.iter().zip(problem.b.iter()))
            .enumerate()
            .map(|(i, (a, (&y, &b)))| {
                let v = a.norm_sqr() + b;
                if y == 0.0 {
                    z_floor
                } else if v > 0.0 {
                    (y / v).max(z_floor)
                } else {
                    bad.push(i);
                    0.0
                }
            }),
    );
    if !bad.is_empty() {
        return Err(Error::ZeroIntensity { indices: bad });
    }
    Ok(z)
}

/// Spectral direction, scale and dual start in one call.
pub fn initialize(problem: &PoissonProblem, opts: PowerIterationOptions, z_floor: f64) -> Result<InitResult> {
    let spectral = spectral_initialize(problem, opts);
    let alpha = scale_factor(problem, &spectral.direction)?;
    let x0 = &spectral.direction * Complex64::new(alpha, 0.0);
    let z0 = dual_initialize(problem, &x0, z_floor)?;
    Ok(InitResult {
        x0,
        alpha,
        z0,
        power_iters_used: spectral.iterations,
        spectral_converged: spectral.converged,
        negative_eigenvalue: spectral.negative_eigenvalue(),
    })
}
