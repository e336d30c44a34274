//! Unregularized PDMM solver.
//!
//! The log term of the Poisson likelihood is lifted with its Fenchel
//! representation, turning `min_x f(x)` into a min-max problem over the
//! primal `x` and a non-negative dual `z`. At the anchor `x_t` (with
//! `d = A x_t`) the concave part of the lifted objective is linearized in
//! `x`, the min and max are swapped, and the inner minimization over `x`
//! has the closed form `x = A^+ (d o z)`. What remains is a convex problem
//! in `z`,
//!
//! ```text
//! p(z) = ||P (d o z)||^2 + sum_i [ z_i b_i - y_i log z_i - z_i |d_i|^2 ],
//! ```
//!
//! where `P` projects onto the range of `A`. Each inner iteration
//! linearizes the concave `z^H D^H (P - I) D z` part and minimizes the
//! separable remainder coordinate-wise ([`dual_step`]). After the inner
//! loop the primal update is `x_{t+1} = A^+ (d o z)` ([`primal_step`]).
//!
//! Every outer step is an MM step on `f`, so `f(x_t)` is non-increasing up
//! to the accuracy of the inner solve. The solver checks this and returns
//! [`Error::ObjectiveIncrease`] when it is violated beyond
//! [`SolverConfig::monotone_slack`].

use std::fmt;
use std::time::Instant;

use crate::error::{check_len, Result};
use crate::linops::{PowerIterationOptions, SensingOperator};
use crate::model::{CompensatedSum, PoissonProblem};
use crate::regularized::CurvatureMode;
use crate::{CVector, Error, RVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Outer stop: `||x_{t+1} - x_t|| / ||x_t|| < eta_outer`.
    pub eta_outer: f64,
    /// Inner stop: `||z_{k+1} - z_k|| / ||z_k|| < eta_inner`.
    pub eta_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Leave the inner loop as soon as the candidate primal update does not
    /// increase the objective.
    pub adaptive_inner: bool,
    /// Lower clamp for dual entries of positive-count coordinates.
    pub z_floor: f64,
    /// Smallest denominator accepted in the `h = 0` branch of the dual step.
    pub denom_guard: f64,
    /// Restart the dual at `y / (|A x_t|^2 + b)` for every new anchor instead
    /// of carrying it over from the previous inner loop. A restarted pass that
    /// fails to descend is retried from the carried-over dual.
    pub dual_restart: bool,
    /// Relative slack of the monotonicity check,
    /// `f(x_{t+1}) <= f(x_t) + slack * (1 + |f(x_t)|)`.
    pub monotone_slack: f64,
    /// Curvature bound used by the regularized solver.
    pub curvature: CurvatureMode,
    /// Power-iteration settings for [`CurvatureMode::Eig`].
    pub curvature_power: PowerIterationOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eta_outer: 1e-6,
            eta_inner: 1e-6,
            max_outer: 1000,
            max_inner: 100,
            adaptive_inner: true,
            z_floor: 1e-12,
            denom_guard: 1e-12,
            dual_restart: true,
            monotone_slack: 1e-9,
            curvature: CurvatureMode::Eig,
            curvature_power: PowerIterationOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta_outer", self.eta_outer),
            ("eta_inner", self.eta_inner),
            ("z_floor", self.z_floor),
            ("denom_guard", self.denom_guard),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.monotone_slack >= 0.0) {
            return Err(Error::InvalidArgument("monotone_slack must be non-negative".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidArgument("iteration caps must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn allowed_increase(&self, f: f64) -> f64 {
        self.monotone_slack * (1.0 + f.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// Hit `max_outer` with the last relative change below `10 * eta_outer`.
    MaxOuter,
    /// Hit `max_outer` while still moving.
    Stalled,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxOuter => "max_outer",
            SolveStatus::Stalled => "stalled",
        })
    }
}

/// One row of the solve trace. Iteration 0 describes the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Negative log-likelihood `f(x_t)`.
    pub objective: f64,
    /// `f(x_t) + lambda ||T x_t||_1` for regularized solves.
    pub regularized_objective: Option<f64>,
    /// `||x_t - x_{t-1}|| / ||x_{t-1}||`; NaN for iteration 0.
    pub relative_change: f64,
    pub inner_iterations: usize,
    pub elapsed_seconds: f64,
    /// Value returned by the observer passed to the solver, if any.
    pub metric: Option<f64>,
}

impl IterationRecord {
    /// The objective the solver descends: `phi` when regularized, else `f`.
    pub fn monitored_objective(&self) -> f64 {
        self.regularized_objective.unwrap_or(self.objective)
    }
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
    /// Number of dual coordinates that went through the denominator guard.
    pub guarded_updates: usize,
}

impl SolveTrace {
    pub fn outer_iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.records.iter().map(|r| r.inner_iterations).sum()
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.monitored_objective())
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.elapsed_seconds)
    }

    /// Every step satisfies `obj_{t+1} <= obj_t + slack * (1 + |obj_t|)`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.records.windows(2).all(|w| {
            let (prev, next) = (w[0].monitored_objective(), w[1].monitored_objective());
            next <= prev + slack * (1.0 + prev.abs())
        })
    }
}

/// Per-outer-iteration quantities: `d = A x_t` and `h = |d|^2`.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub x: CVector,
    pub z: RVector,
    pub d: CVector,
    pub h: RVector,
}

impl IterateState {
    pub fn new(op: &SensingOperator, x: CVector, z: RVector) -> Result<Self> {
        check_len("dual vector", op.rows(), z.len())?;
        let d = op.apply(&x)?;
        let h = d.map(|di| di.norm_sqr());
        Ok(IterateState { x, z, d, h })
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: CVector,
    pub z: RVector,
    pub trace: SolveTrace,
}

/// `c = 2 Re(conj(d) o (P (d o z) - d o z))`, the gradient of the concave
/// part of the dual objective, computed without forming `P`.
pub fn dual_linearization_vector(op: &SensingOperator, d: &CVector, z: &RVector) -> Result<RVector> {
    check_len("dual vector", d.len(), z.len())?;
    let dz = weight(d, z);
    let pdz = op.projection_apply(&dz)?;
    Ok(linearization_from_projection(d, &dz, &pdz))
}

fn linearization_from_projection(d: &CVector, dz: &CVector, pdz: &CVector) -> RVector {
    RVector::from_iterator(
        d.len(),
        d.iter()
            .zip(dz.iter().zip(pdz.iter()))
            .map(|(di, (dzi, pi))| 2.0 * (di.conj() * (pi - dzi)).re),
    )
}

pub(crate) fn weight(d: &CVector, z: &RVector) -> CVector {
    d.zip_map(z, |di, zi| di * zi)
}

/// Closed-form minimizer over `z >= 0` of `c z + h z^2 + b z - y log z - h z`.
///
/// Returns the value and whether the denominator guard was used. For
/// `h > 0` the positive root of `2h z^2 + (b + c - h) z - y = 0` is taken,
/// evaluated in the cancellation-free form when `b + c - h > 0`. For `h = 0`
/// the minimizer is `y / (b + c)`; when `b + c <= denom_guard` the
/// denominator is replaced by `denom_guard` and the update is flagged.
pub fn dual_step_scalar(y: f64, b: f64, c: f64, h: f64, z_floor: f64, denom_guard: f64) -> (f64, bool) {
    let (z, guarded) = if h > 0.0 {
        let lin = b + c - h;
        let root = (lin * lin + 8.0 * h * y).sqrt();
        let z = if lin > 0.0 {
            2.0 * y / (lin + root)
        } else {
            (root - lin) / (4.0 * h)
        };
        (z, false)
    } else {
        let denom = b + c;
        if denom > denom_guard {
            (y / denom, false)
        } else {
            (y / denom_guard, true)
        }
    };
    let floor = if y > 0.0 { z_floor } else { 0.0 };
    (z.max(floor), guarded)
}

#[derive(Debug, Clone)]
pub struct DualUpdate {
    pub z: RVector,
    /// Coordinates that needed the denominator guard.
    pub guarded: usize,
}

/// Elementwise [`dual_step_scalar`].
pub fn dual_step(y: &RVector, b: &RVector, c: &RVector, h: &RVector, config: &SolverConfig) -> DualUpdate {
    let mut guarded = 0;
    let z = RVector::from_iterator(
        y.len(),
        (0..y.len()).map(|i| {
            let (z, g) = dual_step_scalar(y[i], b[i], c[i], h[i], config.z_floor, config.denom_guard);
            guarded += g as usize;
            z
        }),
    );
    DualUpdate { z, guarded }
}

/// `x_{t+1} = A^+ (d o z)`.
pub fn primal_step(op: &SensingOperator, d: &CVector, z: &RVector) -> Result<CVector> {
    check_len("dual vector", d.len(), z.len())?;
    op.pinv_apply(&weight(d, z))
}

/// Dual objective `p(z)` minimized by the inner loop.
pub fn dual_objective(problem: &PoissonProblem, d: &CVector, z: &RVector) -> Result<f64> {
    check_len("anchor", problem.rows(), d.len())?;
    check_len("dual vector", problem.rows(), z.len())?;
    let pdz = problem.op.projection_apply(&weight(d, z))?;
    let mut sum = CompensatedSum::default();
    sum.add(pdz.norm_squared());
    for i in 0..z.len() {
        let (zi, yi) = (z[i], problem.y[i]);
        if yi > 0.0 {
            if zi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            sum.add(-yi * zi.ln());
        }
        sum.add(zi * (problem.b[i] - d[i].norm_sqr()));
    }
    Ok(sum.value())
}

/// Inner maximizer of the lifted objective, `z_i = y_i / (|a_i^H x|^2 + b_i)`.
pub fn inner_maximizer(problem: &PoissonProblem, x: &CVector) -> Result<RVector> {
    let v = problem.intensities(x)?;
    Ok(v.zip_map(&problem.y, |vi, yi| if yi == 0.0 { 0.0 } else { yi / vi }))
}

/// The Fenchel-lifted objective
///
/// ```text
/// h(x, z) = sum_i [ v_i + y_i log z_i - z_i v_i + y_i - y_i log y_i ],
/// ```
///
/// whose maximum over `z >= 0` (attained at [`inner_maximizer`]) equals
/// `f(x)`. The `y_i - y_i log y_i` constants make the identity exact.
pub fn fenchel_objective(problem: &PoissonProblem, x: &CVector, z: &RVector) -> Result<f64> {
    check_len("dual vector", problem.rows(), z.len())?;
    let v = problem.intensities(x)?;
    let mut sum = CompensatedSum::default();
    for i in 0..v.len() {
        let (yi, zi, vi) = (problem.y[i], z[i], v[i]);
        sum.add(vi - zi * vi);
        if yi > 0.0 {
            if zi <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            sum.add(yi * zi.ln() + yi - yi * yi.ln());
        }
    }
    Ok(sum.value())
}

/// Value at `x` of the primal surrogate built at the anchor `x_t`:
///
/// ```text
/// g(x | x_t) = sum_i [ |a_i^H x|^2 + b_i - y_i log(b_i - |d_i|^2 + 2 Re(conj(d_i) a_i^H x)) ]
/// ```
///
/// with `d = A x_t`. It majorizes `f` and touches it at `x_t`. Outside the
/// region where every log argument is positive the surrogate is
/// `f64::INFINITY`.
pub fn primal_surrogate_value(problem: &PoissonProblem, x: &CVector, x_t: &CVector) -> Result<f64> {
    let ax = problem.op.apply(x)?;
    let d = problem.op.apply(x_t)?;
    let mut sum = CompensatedSum::default();
    for i in 0..ax.len() {
        let arg = problem.b[i] - d[i].norm_sqr() + 2.0 * (d[i].conj() * ax[i]).re;
        if !(arg > 0.0) {
            return Ok(f64::INFINITY);
        }
        sum.add(ax[i].norm_sqr() + problem.b[i]);
        if problem.y[i] > 0.0 {
            sum.add(-problem.y[i] * arg.ln());
        }
    }
    Ok(sum.value())
}

/// Result of one inner loop: the dual iterate and the primal candidate it
/// induces.
#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub z: RVector,
    pub iterations: usize,
    pub guarded: usize,
    /// `A^+ (d o z)` at the returned `z`.
    pub x_candidate: CVector,
    /// `A x_candidate`.
    pub ax_candidate: CVector,
    pub candidate_objective: f64,
}

/// Runs dual MM steps for the anchor in `state`.
///
/// Stops when the relative change of `z` drops below `eta_inner` (provided
/// the candidate does not increase the objective beyond the slack), when
/// `adaptive_inner` is set and the candidate satisfies
/// `f(x_candidate) <= current_objective`, or after `max_inner` steps.
///
/// With `dual_restart` the loop starts from `y / (h + b)`; if that pass
/// ends above the slack it is rerun from `state.z` and the lower candidate
/// is kept.
pub fn inner_solve_dual(
    state: &IterateState,
    problem: &PoissonProblem,
    config: &SolverConfig,
    current_objective: f64,
) -> InnerOutcome {
    if !config.dual_restart {
        return inner_pass(state, problem, config, current_objective, state.z.clone());
    }
    let first = inner_pass(state, problem, config, current_objective, anchor_dual(problem, &state.h, config.z_floor));
    if first.candidate_objective <= current_objective + config.allowed_increase(current_objective) {
        return first;
    }
    let second = inner_pass(state, problem, config, current_objective, state.z.clone());
    let (iterations, guarded) = (first.iterations + second.iterations, first.guarded + second.guarded);
    let best = if second.candidate_objective < first.candidate_objective { second } else { first };
    InnerOutcome { iterations, guarded, ..best }
}

fn inner_pass(
    state: &IterateState,
    problem: &PoissonProblem,
    config: &SolverConfig,
    current_objective: f64,
    mut z: RVector,
) -> InnerOutcome {
    let op = &problem.op;
    let mut dz = weight(&state.d, &z);
    let mut x_candidate = op.pinv_unchecked(&dz);
    let mut ax_candidate = op.apply_unchecked(&x_candidate);
    let mut candidate_objective = problem.objective_from_ax(&ax_candidate);
    let mut guarded = 0;
    let mut iterations = 0;
    let allowed = config.allowed_increase(current_objective);

    while iterations < config.max_inner {
        let c = linearization_from_projection(&state.d, &dz, &ax_candidate);
        let update = dual_step(&problem.y, &problem.b, &c, &state.h, config);
        guarded += update.guarded;
        let change = relative_change_real(&update.z, &z);
        z = update.z;
        iterations += 1;

        dz = weight(&state.d, &z);
        x_candidate = op.pinv_unchecked(&dz);
        ax_candidate = op.apply_unchecked(&x_candidate);
        candidate_objective = problem.objective_from_ax(&ax_candidate);

        if config.adaptive_inner && candidate_objective <= current_objective {
            break;
        }
        if change < config.eta_inner && candidate_objective <= current_objective + allowed {
            break;
        }
    }

    InnerOutcome {
        z,
        iterations,
        guarded,
        x_candidate,
        ax_candidate,
        candidate_objective,
    }
}

/// Inner maximizer at the anchor, `y / (h + b)`, floored like the dual step.
pub(crate) fn anchor_dual(problem: &PoissonProblem, h: &RVector, z_floor: f64) -> RVector {
    RVector::from_fn(h.len(), |i, _| {
        let y = problem.y[i];
        let v = h[i] + problem.b[i];
        if y > 0.0 && v > 0.0 {
            (y / v).max(z_floor)
        } else {
            z_floor
        }
    })
}

pub(crate) fn relative_change_real(new: &RVector, old: &RVector) -> f64 {
    let diff = (new - old).norm();
    let base = old.norm();
    if base > 0.0 {
        diff / base
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub(crate) fn relative_change(new: &CVector, old: &CVector) -> f64 {
    let diff = (new - old).norm();
    let base = old.norm();
    if base > 0.0 {
        diff / base
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Per-iteration callback; its return value lands in
/// [`IterationRecord::metric`].
pub type Observer<'a> = &'a mut dyn FnMut(&CVector) -> Option<f64>;

/// Runs PDMM from `(x0, z0)`.
pub fn solve(problem: &PoissonProblem, x0: &CVector, z0: &RVector, config: &SolverConfig) -> Result<Solution> {
    solve_observed(problem, x0, z0, config, &mut |_| None)
}

/// [`solve`] with a callback evaluated at the start point and after every
/// outer iteration (e.g. NRMSE against a known signal).
pub fn solve_observed(
    problem: &PoissonProblem,
    x0: &CVector,
    z0: &RVector,
    config: &SolverConfig,
    observer: Observer<'_>,
) -> Result<Solution> {
    config.validate()?;
    let start = Instant::now();
    let mut state = IterateState::new(&problem.op, x0.clone(), z0.clone())?;
    let mut objective = problem.objective_from_ax(&state.d);
    let mut records = vec![IterationRecord {
        iteration: 0,
        objective,
        regularized_objective: None,
        relative_change: f64::NAN,
        inner_iterations: 0,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        metric: observer(&state.x),
    }];
    let mut guarded = 0;
    let mut status = None;
    let mut last_change = f64::INFINITY;

    for t in 1..=config.max_outer {
        let inner = inner_solve_dual(&state, problem, config, objective);
        guarded += inner.guarded;
        if inner.candidate_objective > objective + config.allowed_increase(objective) {
            return Err(Error::ObjectiveIncrease {
                iteration: t,
                previous: objective,
                current: inner.candidate_objective,
            });
        }
        last_change = relative_change(&inner.x_candidate, &state.x);
        objective = inner.candidate_objective;
        state.h = inner.ax_candidate.map(|a| a.norm_sqr());
        state.d = inner.ax_candidate;
        state.x = inner.x_candidate;
        state.z = inner.z;
        records.push(IterationRecord {
            iteration: t,
            objective,
            regularized_objective: None,
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
    Ok(Solution {
        x: state.x,
        z: state.z,
        trace: SolveTrace {
            records,
            status,
            guarded_updates: guarded,
        },
    })
}
