//! l1-regularized PDMM for `phi(x) = f(x) + lambda ||T x||_1`.
//!
//! The penalty is written as `max_{|w_l| <= 1} Re(w^H T x)`, which adds a
//! complex dual vector `w` (one entry per row of `T`) to the saddle-point
//! problem. Minimizing over `x` gives
//!
//! ```text
//! x = A^+ (d o z) - (lambda / 2) G^{-1} T^H w,      G = A^H A,
//! ```
//!
//! and the inner loop alternates a `z` step (the unregularized dual step
//! with its linear term shifted by `g = lambda Re(conj(d) o A G^{-1} T^H w)`)
//! with a majorized `w` step whose minimizer is a radial projection onto
//! the unit disk. The `w` majorizer needs a bound `e` on the largest
//! eigenvalue of `X = T G^{-1} T^H`; see [`CurvatureMode`].
//!
//! With `lambda = 0` the `w` updates are skipped and the iterates coincide
//! with [`crate::pdmm::solve`].

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;

use crate::error::{check_len, Result};
use crate::linops::{max_eig_hermitian, PowerIterationOptions, SensingOperator};
use crate::model::{CompensatedSum, PoissonProblem};
use crate::pdmm::{
    anchor_dual, dual_step_scalar, relative_change, relative_change_real, weight, IterateState, IterationRecord,
    Observer, SolveStatus, SolveTrace, SolverConfig,
};
use crate::{CVector, Complex64, DMatrix, Error, RVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    Identity,
    /// First differences of a 1-D signal.
    Diff1d,
    /// Horizontal and vertical first differences of a square image stored
    /// column-major.
    Tv2dAnisotropic,
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularizerKind::Identity => "identity",
            RegularizerKind::Diff1d => "diff1d",
            RegularizerKind::Tv2dAnisotropic => "tv2d",
        })
    }
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "l1-identity" => Ok(RegularizerKind::Identity),
            "diff1d" => Ok(RegularizerKind::Diff1d),
            "tv" | "tv2d" | "tv2d-anisotropic" => Ok(RegularizerKind::Tv2dAnisotropic),
            other => Err(Error::InvalidArgument(format!("unknown regularizer kind '{other}'"))),
        }
    }
}

/// Sparse real regularizer `T` (L x K) applied matrix-free, with its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerMatrix {
    kind: RegularizerKind,
    /// Signal length for identity and diff1d, image side for tv2d.
    size: usize,
    pub lambda: f64,
}

/// Builds `T` for a signal of length `size` (identity, diff1d) or a
/// `size x size` image (tv2d).
pub fn build_regularizer(kind: RegularizerKind, size: usize, lambda: f64) -> Result<RegularizerMatrix> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
    }
    let min = match kind {
        RegularizerKind::Identity => 1,
        RegularizerKind::Diff1d | RegularizerKind::Tv2dAnisotropic => 2,
    };
    if size < min {
        return Err(Error::InvalidArgument(format!("{kind} regularizer needs size >= {min}, got {size}")));
    }
    Ok(RegularizerMatrix { kind, size, lambda })
}

impl RegularizerMatrix {
    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    /// Number of rows `L`.
    pub fn rows(&self) -> usize {
        match self.kind {
            RegularizerKind::Identity => self.size,
            RegularizerKind::Diff1d => self.size - 1,
            RegularizerKind::Tv2dAnisotropic => 2 * self.size * (self.size - 1),
        }
    }

    /// Number of columns `K`.
    pub fn cols(&self) -> usize {
        match self.kind {
            RegularizerKind::Identity | RegularizerKind::Diff1d => self.size,
            RegularizerKind::Tv2dAnisotropic => self.size * self.size,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<RegularizerMatrix> {
        build_regularizer(self.kind, self.size, lambda)
    }

    pub fn apply(&self, x: &CVector) -> Result<CVector> {
        check_len("regularizer input", self.cols(), x.len())?;
        Ok(self.apply_unchecked(x))
    }

    pub fn adjoint_apply(&self, w: &CVector) -> Result<CVector> {
        check_len("regularizer dual", self.rows(), w.len())?;
        Ok(self.adjoint_unchecked(w))
    }

    pub(crate) fn apply_unchecked(&self, x: &CVector) -> CVector {
        match self.kind {
            RegularizerKind::Identity => x.clone(),
            RegularizerKind::Diff1d => CVector::from_fn(self.size - 1, |l, _| x[l + 1] - x[l]),
            RegularizerKind::Tv2dAnisotropic => {
                let s = self.size;
                let half = s * (s - 1);
                CVector::from_fn(2 * half, |l, _| {
                    if l < half {
                        // horizontal: pixel (i, j) -> (i, j + 1), l = i + j s
                        x[l + s] - x[l]
                    } else {
                        // vertical: pixel (i, j) -> (i + 1, j), l = i + j (s - 1)
                        let m = l - half;
                        let (i, j) = (m % (s - 1), m / (s - 1));
                        x[i + 1 + j * s] - x[i + j * s]
                    }
                })
            }
        }
    }

    pub(crate) fn adjoint_unchecked(&self, w: &CVector) -> CVector {
        match self.kind {
            RegularizerKind::Identity => w.clone(),
            RegularizerKind::Diff1d => {
                let mut out = CVector::zeros(self.size);
                for (l, wl) in w.iter().enumerate() {
                    out[l] -= wl;
                    out[l + 1] += wl;
                }
                out
            }
            RegularizerKind::Tv2dAnisotropic => {
                let s = self.size;
                let half = s * (s - 1);
                let mut out = CVector::zeros(s * s);
                for l in 0..half {
                    out[l] -= w[l];
                    out[l + s] += w[l];
                }
                for m in 0..half {
                    let (i, j) = (m % (s - 1), m / (s - 1));
                    out[i + j * s] -= w[half + m];
                    out[i + 1 + j * s] += w[half + m];
                }
                out
            }
        }
    }

    /// `||T x||_1` with complex moduli.
    pub fn l1_norm(&self, x: &CVector) -> Result<f64> {
        check_len("regularizer input", self.cols(), x.len())?;
        Ok(self.l1_unchecked(x))
    }

    pub(crate) fn l1_unchecked(&self, x: &CVector) -> f64 {
        let mut sum = CompensatedSum::default();
        for v in self.apply_unchecked(x).iter() {
            sum.add(v.norm());
        }
        sum.value()
    }

    /// Squared column norms of `T`, i.e. the diagonal of `T^T T`.
    fn column_norms_sq(&self) -> RVector {
        match self.kind {
            RegularizerKind::Identity => RVector::from_element(self.size, 1.0),
            RegularizerKind::Diff1d | RegularizerKind::Tv2dAnisotropic => {
                // every nonzero of T is +-1, so the squared norm counts nonzeros
                let mut counts = RVector::zeros(self.cols());
                for l in 0..self.rows() {
                    let (a, b) = self.row_support(l);
                    counts[a] += 1.0;
                    counts[b] += 1.0;
                }
                counts
            }
        }
    }

    /// Column indices `(minus, plus)` of a difference row.
    fn row_support(&self, l: usize) -> (usize, usize) {
        match self.kind {
            RegularizerKind::Identity => (l, l),
            RegularizerKind::Diff1d => (l, l + 1),
            RegularizerKind::Tv2dAnisotropic => {
                let s = self.size;
                let half = s * (s - 1);
                if l < half {
                    (l, l + s)
                } else {
                    let m = l - half;
                    let (i, j) = (m % (s - 1), m / (s - 1));
                    (i + j * s, i + 1 + j * s)
                }
            }
        }
    }

    /// Dense copy of `T`, for tests and small problems.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(self.rows(), self.cols());
        for l in 0..self.rows() {
            let (a, b) = self.row_support(l);
            if self.kind == RegularizerKind::Identity {
                t[(l, a)] = 1.0;
            } else {
                t[(l, a)] = -1.0;
                t[(l, b)] = 1.0;
            }
        }
        t
    }
}

/// How the curvature bound `e >= lambda_max(T G^{-1} T^H)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurvatureMode {
    /// Power iteration for the largest eigenvalue (plus its residual).
    #[default]
    Eig,
    /// `trace(X)`, a cheaper and looser bound.
    Trace,
}

impl fmt::Display for CurvatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurvatureMode::Eig => "eig",
            CurvatureMode::Trace => "trace",
        })
    }
}

impl FromStr for CurvatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eig" => Ok(CurvatureMode::Eig),
            "trace" => Ok(CurvatureMode::Trace),
            other => Err(Error::InvalidArgument(format!("unknown curvature mode '{other}'"))),
        }
    }
}

/// Quantities fixed for the whole regularized solve.
#[derive(Debug, Clone)]
pub struct RegPrecompute {
    /// Curvature bound `e`.
    pub curvature: f64,
    pub mode: CurvatureMode,
    /// Power iterations spent (0 in trace mode).
    pub power_iterations: usize,
}

impl RegPrecompute {
    pub fn new(op: &SensingOperator, reg: &RegularizerMatrix, mode: CurvatureMode, opts: PowerIterationOptions) -> Result<Self> {
        check_len("regularizer columns", op.cols(), reg.cols())?;
        let (curvature, power_iterations) = match mode {
            CurvatureMode::Eig => {
                let est = max_eig_hermitian(
                    reg.rows(),
                    |v| reg.apply_unchecked(&op.gram_solve_unchecked(&reg.adjoint_unchecked(v))),
                    opts,
                );
                if !est.converged {
                    log::warn!("curvature power iteration stopped after {} iterations", est.iterations);
                }
                (est.value + est.residual, est.iterations)
            }
            CurvatureMode::Trace => (gram_weighted_trace(op, reg), 0),
        };
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::Degenerate(format!("curvature bound {curvature}")));
        }
        Ok(RegPrecompute { curvature, mode, power_iterations })
    }
}

/// `trace(T G^{-1} T^H) = trace(G^{-1} T^H T)`.
fn gram_weighted_trace(op: &SensingOperator, reg: &RegularizerMatrix) -> f64 {
    let mut sum = CompensatedSum::default();
    if let SensingOperator::MaskedDft(m) = op {
        let norms = reg.column_norms_sq();
        for (n, g) in norms.iter().zip(m.gram_diagonal().iter()) {
            sum.add(n / g);
        }
        return sum.value();
    }
    let k = reg.cols();
    for j in 0..k {
        let mut e = CVector::zeros(k);
        e[j] = Complex64::new(1.0, 0.0);
        let col = reg.adjoint_unchecked(&reg.apply_unchecked(&e));
        sum.add(op.gram_solve_unchecked(&col)[j].re);
    }
    sum.value()
}

/// Dual step with the linear term shifted by `g`: the `h > 0` branch uses
/// `b + c - g - h` and the `h = 0` branch `y / (b + c - g)`. Returns the new
/// `z` and the number of guarded coordinates.
pub fn reg_dual_step_z(y: &RVector, b: &RVector, c: &RVector, g: &RVector, h: &RVector, config: &SolverConfig) -> (RVector, usize) {
    let mut guarded = 0;
    let z = RVector::from_iterator(
        y.len(),
        (0..y.len()).map(|i| {
            let (z, flag) = dual_step_scalar(y[i], b[i], c[i] - g[i], h[i], config.z_floor, config.denom_guard);
            guarded += flag as usize;
            z
        }),
    );
    (z, guarded)
}

/// Projects each entry of `u` onto the closed unit disk.
pub fn reg_dual_step_w(u: &CVector) -> CVector {
    u.map(|ul| {
        let r = ul.norm();
        if r <= 1.0 {
            ul
        } else {
            ul / r
        }
    })
}

/// `A^+ (d o z) - (lambda / 2) G^{-1} T^H w`.
pub fn reg_primal_step(
    op: &SensingOperator,
    d: &CVector,
    z: &RVector,
    reg: &RegularizerMatrix,
    w: &CVector,
) -> Result<CVector> {
    check_len("dual vector", op.rows(), z.len())?;
    check_len("anchor", op.rows(), d.len())?;
    check_len("regularizer columns", op.cols(), reg.cols())?;
    check_len("regularizer dual", reg.rows(), w.len())?;
    let xa = op.pinv_unchecked(&weight(d, z));
    if reg.lambda == 0.0 {
        return Ok(xa);
    }
    let s = op.gram_solve_unchecked(&reg.adjoint_unchecked(w));
    Ok(xa - s * Complex64::new(reg.lambda / 2.0, 0.0))
}

/// `phi(x) = f(x) + lambda ||T x||_1`.
pub fn regularized_objective(problem: &PoissonProblem, reg: &RegularizerMatrix, x: &CVector) -> Result<f64> {
    check_len("regularizer columns", problem.cols(), reg.cols())?;
    let ax = problem.op.apply(x)?;
    Ok(problem.objective_from_ax(&ax) + reg.lambda * reg.l1_unchecked(x))
}

/// Random unit-modulus starting point for `w`.
pub fn random_unit_dual<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVector {
    CVector::from_fn(len, |_, _| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU))
}

#[derive(Debug, Clone)]
pub struct RegularizedSolution {
    pub x: CVector,
    pub z: RVector,
    pub w: CVector,
    pub trace: SolveTrace,
    pub precompute: RegPrecompute,
}

/// Work vectors tied to the current `z` and `w`.
struct InnerCache {
    dz: CVector,
    /// `A^+ (d o z)`
    xa: CVector,
    /// `A xa`, equal to `P (d o z)`.
    pdz: CVector,
    /// `G^{-1} T^H w`
    s: CVector,
    /// `A s`
    as_: CVector,
}

struct RegInnerOutcome {
    iterations: usize,
    guarded: usize,
    x: CVector,
    ax: CVector,
    likelihood: f64,
    phi: f64,
}

/// Runs the regularized solver from `(x0, z0, w0)`.
pub fn solve_regularized(
    problem: &PoissonProblem,
    reg: &RegularizerMatrix,
    x0: &CVector,
    z0: &RVector,
    w0: &CVector,
    config: &SolverConfig,
) -> Result<RegularizedSolution> {
    solve_regularized_observed(problem, reg, x0, z0, w0, config, &mut |_| None)
}

/// [`solve_regularized`] with a per-iteration observer.
pub fn solve_regularized_observed(
    problem: &PoissonProblem,
    reg: &RegularizerMatrix,
    x0: &CVector,
    z0: &RVector,
    w0: &CVector,
    config: &SolverConfig,
    observer: Observer<'_>,
) -> Result<RegularizedSolution> {
    config.validate()?;
    check_len("regularizer columns", problem.cols(), reg.cols())?;
    check_len("regularizer dual", reg.rows(), w0.len())?;
    if w0.iter().any(|w| !(w.norm() <= 1.0 + 1e-12)) {
        return Err(Error::InvalidArgument("w0 entries must lie in the unit disk".into()));
    }
    let start = Instant::now();
    let op = &problem.op;
    let active = reg.lambda > 0.0;
    let precompute = if active {
        RegPrecompute::new(op, reg, config.curvature, config.curvature_power)?
    } else {
        RegPrecompute { curvature: 1.0, mode: config.curvature, power_iterations: 0 }
    };

    let mut state = IterateState::new(op, x0.clone(), z0.clone())?;
    let mut w = w0.clone();
    let mut likelihood = problem.objective_from_ax(&state.d);
    let mut phi = likelihood + reg.lambda * reg.l1_unchecked(&state.x);
    let mut records = vec![IterationRecord {
        iteration: 0,
        objective: likelihood,
        regularized_objective: Some(phi),
        relative_change: f64::NAN,
        inner_iterations: 0,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        metric: observer(&state.x),
    }];
    let mut guarded = 0;
    let mut status = None;
    let mut last_change = f64::INFINITY;

    for t in 1..=config.max_outer {
        let inner = reg_inner_loop(problem, reg, &precompute, &mut state, &mut w, config, phi);
        guarded += inner.guarded;
        if inner.phi > phi + config.allowed_increase(phi) {
            return Err(Error::ObjectiveIncrease { iteration: t, previous: phi, current: inner.phi });
        }
        last_change = relative_change(&inner.x, &state.x);
        likelihood = inner.likelihood;
        phi = inner.phi;
        state.h = inner.ax.map(|a| a.norm_sqr());
        state.d = inner.ax;
        state.x = inner.x;
        records.push(IterationRecord {
            iteration: t,
            objective: likelihood,
            regularized_objective: Some(phi),
            relative_change: last_change,
            inner_iterations: inner.iterations,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            metric: observer(&state.x),
        });
        if last_change < config.eta_outer {
            status = Some(SolveStatus::Converged);
            break;
        }
    }

    let status = status.unwrap_or(if last_change < 10.0 * config.eta_outer {
        SolveStatus::MaxOuter
    } else {
        SolveStatus::Stalled
    });
    Ok(RegularizedSolution {
        x: state.x,
        z: state.z,
        w,
        trace: SolveTrace { records, status, guarded_updates: guarded },
        precompute,
    })
}

/// Inner loop for one anchor. Updates `state.z` and `w` in place and
/// returns the primal candidate. Restart and fallback follow
/// [`crate::pdmm::inner_solve_dual`].
fn reg_inner_loop(
    problem: &PoissonProblem,
    reg: &RegularizerMatrix,
    pre: &RegPrecompute,
    state: &mut IterateState,
    w: &mut CVector,
    config: &SolverConfig,
    phi_t: f64,
) -> RegInnerOutcome {
    if !config.dual_restart {
        let (out, z, w_new) = reg_inner_pass(problem, reg, pre, state, state.z.clone(), w.clone(), config, phi_t);
        state.z = z;
        *w = w_new;
        return out;
    }
    let restart = anchor_dual(problem, &state.h, config.z_floor);
    let first = reg_inner_pass(problem, reg, pre, state, restart, w.clone(), config, phi_t);
    let best = if first.0.phi <= phi_t + config.allowed_increase(phi_t) {
        first
    } else {
        let mut second = reg_inner_pass(problem, reg, pre, state, state.z.clone(), w.clone(), config, phi_t);
        second.0.iterations += first.0.iterations;
        second.0.guarded += first.0.guarded;
        if second.0.phi < first.0.phi {
            second
        } else {
            (RegInnerOutcome { iterations: second.0.iterations, guarded: second.0.guarded, ..first.0 }, first.1, first.2)
        }
    };
    state.z = best.1;
    *w = best.2;
    best.0
}

#[allow(clippy::too_many_arguments)]
fn reg_inner_pass(
    problem: &PoissonProblem,
    reg: &RegularizerMatrix,
    pre: &RegPrecompute,
    state: &IterateState,
    mut z: RVector,
    mut w: CVector,
    config: &SolverConfig,
    phi_t: f64,
) -> (RegInnerOutcome, RVector, CVector) {
    let op = &problem.op;
    let lambda = reg.lambda;
    let active = lambda > 0.0;
    let half_lambda = Complex64::new(lambda / 2.0, 0.0);
    let d = &state.d;

    let dz = weight(d, &z);
    let xa = op.pinv_unchecked(&dz);
    let pdz = op.apply_unchecked(&xa);
    let (s, as_) = if active {
        let s = op.gram_solve_unchecked(&reg.adjoint_unchecked(&w));
        let as_ = op.apply_unchecked(&s);
        (s, as_)
    } else {
        (CVector::zeros(op.cols()), CVector::zeros(op.rows()))
    };
    let mut cache = InnerCache { dz, xa, pdz, s, as_ };
    let allowed = config.allowed_increase(phi_t);
    let mut guarded = 0;
    let mut iterations = 0;
    let (mut x, mut ax, mut likelihood, mut phi);

    loop {
        let c = RVector::from_iterator(
            d.len(),
            (0..d.len()).map(|i| 2.0 * (d[i].conj() * (cache.pdz[i] - cache.dz[i])).re),
        );
        let change = if active {
            let g = RVector::from_iterator(d.len(), (0..d.len()).map(|i| lambda * (d[i].conj() * cache.as_[i]).re));
            let (z_new, flagged) = reg_dual_step_z(&problem.y, &problem.b, &c, &g, &state.h, config);
            guarded += flagged;
            let change = relative_change_real(&z_new, &z);
            z = z_new;
            change
        } else {
            let update = crate::pdmm::dual_step(&problem.y, &problem.b, &c, &state.h, config);
            guarded += update.guarded;
            let change = relative_change_real(&update.z, &z);
            z = update.z;
            change
        };
        iterations += 1;

        cache.dz = weight(d, &z);
        cache.xa = op.pinv_unchecked(&cache.dz);
        cache.pdz = op.apply_unchecked(&cache.xa);

        if active {
            let e = pre.curvature;
            let txa = reg.apply_unchecked(&cache.xa);
            let ts = reg.apply_unchecked(&cache.s);
            let u = CVector::from_fn(w.len(), |l, _| (2.0 / (lambda * e)) * txa[l] - ts[l] / e + w[l]);
            w = reg_dual_step_w(&u);
            cache.s = op.gram_solve_unchecked(&reg.adjoint_unchecked(&w));
            cache.as_ = op.apply_unchecked(&cache.s);
            x = &cache.xa - &cache.s * half_lambda;
            ax = &cache.pdz - &cache.as_ * half_lambda;
            likelihood = problem.objective_from_ax(&ax);
            phi = likelihood + lambda * reg.l1_unchecked(&x);
        } else {
            x = cache.xa.clone();
            ax = cache.pdz.clone();
            likelihood = problem.objective_from_ax(&ax);
            phi = likelihood;
        }

        if config.adaptive_inner && phi <= phi_t {
            break;
        }
        if change < config.eta_inner && phi <= phi_t + allowed {
            break;
        }
        if iterations >= config.max_inner {
            break;
        }
    }

    (RegInnerOutcome { iterations, guarded, x, ax, likelihood, phi }, z, w)
}
