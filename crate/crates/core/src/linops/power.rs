use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CVector, Complex64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterationOptions {
    /// Stop once the Rayleigh quotient changes by less than `tol` relative.
    pub tol: f64,
    pub max_iters: usize,
    /// Seeds the deterministic perturbation of the all-ones start vector.
    pub seed: u64,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        PowerIterationOptions {
            tol: 1e-8,
            max_iters: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenEstimate {
    /// Rayleigh quotient at the returned vector (signed).
    pub value: f64,
    /// Unit-norm eigenvector estimate.
    pub vector: CVector,
    /// `||H v - value * v||`, an a-posteriori accuracy measure.
    pub residual: f64,
    pub iterations: usize,
    /// False when `max_iters` was reached first.
    pub converged: bool,
}

fn start_vector(dim: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = 1.0 / (dim as f64).sqrt();
    let v = CVector::from_fn(dim, |_, _| {
        let re = base * (1.0 + 0.1 * (rng.random::<f64>() - 0.5));
        let im = base * 0.1 * (rng.random::<f64>() - 0.5);
        Complex64::new(re, im)
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Power iteration for the eigenvalue of largest magnitude of a Hermitian
/// operator given as a closure. The returned value keeps its sign, so an
/// indefinite operator whose dominant eigenvalue is negative reports it as
/// negative.
pub fn dominant_eigenpair<F>(dim: usize, mut apply: F, opts: PowerIterationOptions) -> EigenEstimate
where
    F: FnMut(&CVector) -> CVector,
{
    let mut v = start_vector(dim, opts.seed);
    let mut hv = apply(&v);
    let mut value = v.dotc(&hv).re;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        let norm = hv.norm();
        if norm == 0.0 || !norm.is_finite() {
            // v lies in the null space (or the operator blew up); nothing to refine.
            converged = norm == 0.0;
            break;
        }
        v = &hv / Complex64::new(norm, 0.0);
        hv = apply(&v);
        let next = v.dotc(&hv).re;
        iterations += 1;
        let change = (next - value).abs();
        value = next;
        if change <= opts.tol * value.abs() {
            converged = true;
            break;
        }
    }

    let residual = (&hv - &v * Complex64::new(value, 0.0)).norm();
    EigenEstimate {
        value,
        vector: v,
        residual,
        iterations,
        converged,
    }
}

/// Largest eigenvalue of a Hermitian positive semi-definite operator.
pub fn max_eig_hermitian<F>(dim: usize, apply: F, opts: PowerIterationOptions) -> EigenEstimate
where
    F: FnMut(&CVector) -> CVector,
{
    let mut est = dominant_eigenpair(dim, apply, opts);
    est.value = est.value.max(0.0);
    est
}
