//! Poisson measurement model.
//!
//! Counts follow `y_i ~ Poisson(|a_i^H x|^2 + b_i)`. The maximum-likelihood
//! estimate minimizes
//!
//! ```text
//! f(x) = sum_i [ v_i - y_i log v_i ],   v_i = |a_i^H x|^2 + b_i,
//! ```
//!
//! with the convention `0 log 0 = 0`. When some `v_i = 0` while `y_i > 0`
//! the objective is `f64::INFINITY`, which MM iterations can still compare
//! against.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{check_len, Result};
use crate::linops::{DenseOperator, MaskedDftOperator, SensingOperator};
use crate::{CVector, Complex64, DMatrix, Error, RVector};

/// A Poisson phase-retrieval instance.
#[derive(Debug, Clone)]
pub struct PoissonProblem {
    pub op: SensingOperator,
    /// Non-negative counts, one per measurement.
    pub y: RVector,
    /// Non-negative background, one per measurement.
    pub b: RVector,
}

impl PoissonProblem {
    pub fn new(op: SensingOperator, y: RVector, b: RVector) -> Result<Self> {
        check_len("counts", op.rows(), y.len())?;
        check_len("background", op.rows(), b.len())?;
        if y.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("counts must be finite and non-negative".into()));
        }
        if b.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(
                "background must be finite and non-negative".into(),
            ));
        }
        Ok(PoissonProblem { op, y, b })
    }

    pub fn rows(&self) -> usize {
        self.op.rows()
    }

    pub fn cols(&self) -> usize {
        self.op.cols()
    }

    /// `|A x|^2 + b`.
    pub fn intensities(&self, x: &CVector) -> Result<RVector> {
        forward_intensity(&self.op, x, &self.b)
    }

    /// Objective value given a precomputed `A x`.
    pub(crate) fn objective_from_ax(&self, ax: &CVector) -> f64 {
        let mut sum = CompensatedSum::default();
        for ((a, &y), &b) in ax.iter().zip(self.y.iter()).zip(self.b.iter()) {
            let v = a.norm_sqr() + b;
            if y == 0.0 {
                sum.add(v);
            } else if v > 0.0 {
                sum.add(v - y * v.ln());
            } else {
                return f64::INFINITY;
            }
        }
        sum.value()
    }
}

/// The signal used to generate an instance.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub x_true: CVector,
    /// Multiplies `|A x_true|^2` at generation time.
    pub photon_scale: f64,
}

impl GroundTruth {
    pub fn new(x_true: CVector, photon_scale: f64) -> Result<Self> {
        if !(photon_scale.is_finite() && photon_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "photon scale must be positive, got {photon_scale}"
            )));
        }
        Ok(GroundTruth { x_true, photon_scale })
    }

    /// The signal the likelihood is centred on: `sqrt(photon_scale) * x_true`.
    /// Recovered estimates should be compared against this vector.
    pub fn effective_signal(&self) -> CVector {
        &self.x_true * Complex64::new(self.photon_scale.sqrt(), 0.0)
    }
}

/// `|A x|^2 + b`, elementwise.
pub fn forward_intensity(op: &SensingOperator, x: &CVector, b: &RVector) -> Result<RVector> {
    check_len("background", op.rows(), b.len())?;
    let ax = op.apply(x)?;
    Ok(RVector::from_iterator(
        ax.len(),
        ax.iter().zip(b.iter()).map(|(a, &bi)| a.norm_sqr() + bi),
    ))
}

/// Draws `y_i ~ Poisson(photon_scale * |a_i^H x_true|^2 + b_i)` independently.
pub fn sample_measurements<R: Rng + ?Sized>(
    op: &SensingOperator,
    truth: &GroundTruth,
    b: &RVector,
    rng: &mut R,
) -> Result<PoissonProblem> {
    check_len("background", op.rows(), b.len())?;
    let ax = op.apply(&truth.x_true)?;
    let mut y = RVector::zeros(op.rows());
    for ((yi, a), &bi) in y.iter_mut().zip(ax.iter()).zip(b.iter()) {
        *yi = sample_poisson(truth.photon_scale * a.norm_sqr() + bi, rng)?;
    }
    PoissonProblem::new(op.clone(), y, b.clone())
}

/// One Poisson draw; a zero mean always yields zero.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<f64> {
    if mean == 0.0 {
        return Ok(0.0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::InvalidArgument(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng))
}

/// Negative Poisson log-likelihood `f(x)`; `f64::INFINITY` when a positive
/// count meets a zero intensity.
pub fn neg_log_likelihood(problem: &PoissonProblem, x: &CVector) -> Result<f64> {
    let ax = problem.op.apply(x)?;
    Ok(problem.objective_from_ax(&ax))
}

/// Gradient with respect to the packed real coordinates,
/// `2 A^H [(1 - y / v) o (A x)]`, which vanishes exactly at stationary points.
pub fn wirtinger_gradient(problem: &PoissonProblem, x: &CVector) -> Result<CVector> {
    let ax = problem.op.apply(x)?;
    let mut bad = Vec::new();
    let weighted = CVector::from_iterator(
        ax.len(),
        ax.iter()
            .zip(problem.y.iter().zip(problem.b.iter()))
            .enumerate()
            .map(|(i, (a, (&y, &b)))| {
                let v = a.norm_sqr() + b;
                if v > 0.0 {
                    a * (2.0 * (1.0 - y / v))
                } else {
                    if y > 0.0 {
                        bad.push(i);
                    }
                    // v = 0 forces a = 0
                    Complex64::new(0.0, 0.0)
                }
            }),
    );
    if !bad.is_empty() {
        return Err(Error::ZeroIntensity { indices: bad });
    }
    Ok(problem.op.adjoint_unchecked(&weighted))
}

/// A unit-norm signal with i.i.d. standard complex Gaussian entries before
/// normalization.
pub fn random_signal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CVector {
    let x = CVector::from_fn(k, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = x.norm();
    x / Complex64::new(n, 0.0)
}

/// Dense `N x K` operator whose entries have independent Uniform(0, 1) real
/// and imaginary parts.
pub fn make_random_operator<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SensingOperator> {
    if k == 0 || n <= k {
        return Err(Error::InvalidArgument(format!(
            "random operator needs N > K >= 1, got N={n}, K={k}"
        )));
    }
    let entries = DMatrix::from_fn(n, k, |_, _| Complex64::new(rng.random(), rng.random()));
    Ok(DenseOperator::new(entries)?.into())
}

/// 1-D masked DFT operator: `mask_count` masks of length `k`, padded DFT
/// length `2k - 1`.
pub fn make_masked_dft_operator<R: Rng + ?Sized>(
    k: usize,
    mask_count: usize,
    rng: &mut R,
) -> Result<SensingOperator> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("masked DFT needs K >= 2, got {k}")));
    }
    Ok(MaskedDftOperator::new_1d(k, mask_count, rng)?.into())
}

/// 2-D masked DFT operator on a `side x side` image.
pub fn make_masked_dft_operator_2d<R: Rng + ?Sized>(
    side: usize,
    mask_count: usize,
    rng: &mut R,
) -> Result<SensingOperator> {
    if side < 2 {
        return Err(Error::InvalidArgument(format!("image side must be >= 2, got {side}")));
    }
    Ok(MaskedDftOperator::new_2d(side, mask_count, rng)?.into())
}

/// Rescales `op` so that the mean of `|a_i^H x_ref|^2` equals one.
pub fn normalize_operator(op: &SensingOperator, x_ref: &CVector) -> Result<SensingOperator> {
    let ax = op.apply(x_ref)?;
    let mean = ax.iter().map(|a| a.norm_sqr()).sum::<f64>() / ax.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::Degenerate("A x_ref is zero; cannot normalize".into()));
    }
    if mean == 1.0 {
        return Ok(op.clone());
    }
    op.scaled(1.0 / mean.sqrt())
}

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
