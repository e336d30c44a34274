//! Recovery metrics that ignore the global-phase ambiguity.

use rustfft::FftPlanner;

use crate::error::{check_len, Result};
use crate::pdmm::SolveTrace;
use crate::{CVector, Complex64, Error};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub nrmse: f64,
    pub autocorr_mse: Option<f64>,
    /// Unit scalar `e^{i phi}` applied to `x_true` before comparison.
    pub aligned_phase: Complex64,
}

/// `s / |s|` for `s = x_true^H x_opt`, with `1` when `s = 0`.
pub fn aligned_phase(x_opt: &CVector, x_true: &CVector) -> Result<Complex64> {
    check_len("signal", x_true.len(), x_opt.len())?;
    let s = x_true.dotc(x_opt);
    let r = s.norm();
    Ok(if r > 0.0 { s / r } else { Complex64::new(1.0, 0.0) })
}

/// `||x_opt - e^{i phi} x_true|| / ||x_true||` with the optimal phase.
pub fn nrmse(x_opt: &CVector, x_true: &CVector) -> Result<f64> {
    Ok(evaluate(x_opt, x_true, None)?.nrmse)
}

/// NRMSE, the phase it used and optionally the circular autocorrelation MSE.
pub fn evaluate(x_opt: &CVector, x_true: &CVector, autocorr: Option<Autocorrelation>) -> Result<MetricReport> {
    let norm = x_true.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("reference signal is zero".into()));
    }
    let phase = aligned_phase(x_opt, x_true)?;
    let nrmse = (x_opt - x_true * phase).norm() / norm;
    let autocorr_mse = autocorr.map(|kind| autocorr_mse(x_opt, x_true, kind)).transpose()?;
    Ok(MetricReport { nrmse, autocorr_mse, aligned_phase: phase })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Autocorrelation {
    /// Lags `-(K-1)..=K-1` of the zero-padded sequence.
    Linear,
    /// Lags modulo `K`; invariant under circular shifts.
    Circular,
}

/// Autocorrelation `r[m] = sum_n x[n + m] conj(x[n])`, computed by FFT.
///
/// Linear lags are returned in the order `0, 1, .., K-1, -(K-1), .., -1`.
pub fn autocorrelation(x: &CVector, kind: Autocorrelation) -> CVector {
    let k = x.len();
    if k == 0 {
        return CVector::zeros(0);
    }
    let len = match kind {
        Autocorrelation::Linear => 2 * k - 1,
        Autocorrelation::Circular => k,
    };
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..k].copy_from_slice(x.as_slice());
    forward.process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    inverse.process(&mut buf);
    let scale = 1.0 / len as f64;
    CVector::from_iterator(len, buf.into_iter().map(|v| v * scale))
}

/// Mean squared difference of the two autocorrelation sequences.
pub fn autocorr_mse(x_opt: &CVector, x_true: &CVector, kind: Autocorrelation) -> Result<f64> {
    check_len("signal", x_true.len(), x_opt.len())?;
    let a = autocorrelation(x_opt, kind);
    let b = autocorrelation(x_true, kind);
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok((&a - b).norm_squared() / a.len() as f64)
}

/// `(seconds, metric)` pairs from a trace whose records carry a metric.
pub fn metric_curve(trace: &SolveTrace) -> Vec<(f64, f64)> {
    trace
        .records
        .iter()
        .filter_map(|r| r.metric.map(|m| (r.elapsed_seconds, m)))
        .collect()
}
