//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{c, dense, dual_newton_oracle, median, random_instance, rng, spectral_solve};
use pdmm::experiment::{run_experiment, ExperimentSpec, Mode, OperatorKind, RegChoice, TraceRow};
use pdmm::init::initialize;
use pdmm::linops::PowerIterationOptions;
use pdmm::model::{neg_log_likelihood, random_signal, wirtinger_gradient};
use pdmm::pdmm::{
    dual_step, dual_step_scalar, fenchel_objective, inner_maximizer, inner_solve_dual, primal_step,
    primal_surrogate_value, solve_observed, IterateState,
};
use pdmm::regularized::{build_regularizer, reg_dual_step_z, solve_regularized_observed};
use pdmm::{CVector, DMatrix, DenseOperator, PoissonProblem, RVector, RegularizerKind, SolveStatus, SolverConfig};
use rand::Rng;

/// Median NRMSE of the first verified run at K=20, N=800, b=0.1, photon
/// scale 150, seed 7 was 0.0311. Frozen with headroom.
const RANDOM_SETTING_MEDIAN_NRMSE: f64 = 0.04;
const SLACK: f64 = 1e-9;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn traces_monotone(traces: &[TraceRow]) -> bool {
    traces
        .windows(2)
        .filter(|w| w[0].trial == w[1].trial)
        .all(|w| w[1].objective <= w[0].objective + SLACK * (1.0 + w[0].objective.abs()))
}

fn monotone_descent() -> Result<String, String> {
    let start = Instant::now();
    let config = SolverConfig::default();
    let mut runs = 0;
    for b in [0.1, 0.0] {
        for seed in 0..50 {
            let inst = random_instance(800, 20, b, 1.0, seed);
            let sol = spectral_solve(&inst.problem, &config).map_err(|e| format!("b={b} seed {seed}: {e}"))?;
            ensure(sol.trace.is_monotone(SLACK), || format!("b={b} seed {seed}: objective increased"))?;
            ensure(sol.trace.final_objective().is_finite(), || format!("b={b} seed {seed}: non-finite objective"))?;
            runs += 1;
        }
    }
    for (reg, lambda) in [(RegChoice::L1Identity, 1.0), (RegChoice::Tv, 1.0), (RegChoice::Tv, 8.0)] {
        for b in [0.1, 0.0] {
            let spec = ExperimentSpec { mode: Mode::Trace, reg, lambda, b_value: b, trials: 10, seed: 11, ..Default::default() };
            let out = run_experiment(&spec).map_err(|e| e.to_string())?;
            ensure(out.rows.iter().all(|r| r.status != "failed"), || format!("{reg:?} b={b}: a trial failed"))?;
            ensure(traces_monotone(&out.traces), || format!("{reg:?} lambda={lambda} b={b}: objective increased"))?;
            runs += out.rows.len();
        }
    }
    let image = ExperimentSpec { mode: Mode::ImageTv, side: 16, masks: 5, trials: 1, ..Default::default() };
    let out = run_experiment(&image).map_err(|e| e.to_string())?;
    ensure(traces_monotone(&out.traces), || "2-D TV: objective increased".into())?;
    runs += 1;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{runs} runs monotone in {secs:.1} s"))
}

fn fenchel_equivalence() -> Result<String, String> {
    let mut r = rng(21);
    let mut worst: f64 = 0.0;
    for pair in 0..100u64 {
        let k = r.random_range(1..=12);
        let n = r.random_range(k + 1..=10 * k + 5);
        let b = if pair % 4 == 0 { 0.0 } else { r.random_range(0.01..1.0) };
        let inst = random_instance(n, k, b, r.random_range(0.5..200.0), 1000 + pair);
        let x = random_signal(k, &mut r) * c(r.random_range(0.1..20.0), 0.0);
        let z = inner_maximizer(&inst.problem, &x).map_err(|e| e.to_string())?;
        let h = fenchel_objective(&inst.problem, &x, &z).map_err(|e| e.to_string())?;
        let f = neg_log_likelihood(&inst.problem, &x).map_err(|e| e.to_string())?;
        worst = worst.max((h - f).abs() / f.abs().max(f64::MIN_POSITIVE));
    }
    ensure(worst <= 1e-10, || format!("relative gap {worst:e}"))?;
    Ok(format!("worst relative gap {worst:.2e}"))
}

fn surrogate_majorization() -> Result<String, String> {
    // One unknown, two measurements, true value 8, anchor 4.
    let a = DMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.5, 0.0)]);
    let op = DenseOperator::new(a).map_err(|e| e.to_string())?;
    let b = RVector::from_element(2, 0.1);
    let y = RVector::from_vec(vec![(64.0f64 + 0.1).round(), (16.0f64 + 0.1).round()]);
    let p = PoissonProblem::new(op.into(), y, b).map_err(|e| e.to_string())?;
    let anchor = CVector::from_element(1, c(4.0, 0.0));
    let at = |v: f64| CVector::from_element(1, c(v, 0.0));
    let f_t = neg_log_likelihood(&p, &anchor).map_err(|e| e.to_string())?;
    let g_t = primal_surrogate_value(&p, &anchor, &anchor).map_err(|e| e.to_string())?;
    ensure((g_t - f_t).abs() <= 1e-10 * f_t.abs(), || format!("not tight at anchor: {g_t} vs {f_t}"))?;
    // feasible where every log argument b - |d|^2 + 2 Re(d* a x) is positive
    let lo = (0..2)
        .map(|i| {
            let s = [1.0, 0.5][i];
            (s * s * 16.0 - 0.1) / (8.0 * s * s)
        })
        .fold(0.0f64, f64::max);
    let mut points = 0;
    for i in 1..=200 {
        let v = lo + (12.0 - lo) * i as f64 / 200.0;
        let g = primal_surrogate_value(&p, &at(v), &anchor).map_err(|e| e.to_string())?;
        let f = neg_log_likelihood(&p, &at(v)).map_err(|e| e.to_string())?;
        ensure(g >= f - 1e-10 * f.abs(), || format!("surrogate below f at x={v}: {g} < {f}"))?;
        points += 1;
    }
    let mut r = rng(31);
    for seed in 0..20u64 {
        let inst = random_instance(40, 5, 0.1, 20.0, 300 + seed);
        let anchor = random_signal(5, &mut r) * c(r.random_range(0.5..10.0), 0.0);
        let f_t = neg_log_likelihood(&inst.problem, &anchor).map_err(|e| e.to_string())?;
        let g_t = primal_surrogate_value(&inst.problem, &anchor, &anchor).map_err(|e| e.to_string())?;
        ensure((g_t - f_t).abs() <= 1e-10 * f_t.abs(), || format!("instance {seed}: not tight at anchor"))?;
        for _ in 0..50 {
            let x = &anchor + random_signal(5, &mut r) * c(r.random_range(0.01..3.0), 0.0);
            let g = primal_surrogate_value(&inst.problem, &x, &anchor).map_err(|e| e.to_string())?;
            let f = neg_log_likelihood(&inst.problem, &x).map_err(|e| e.to_string())?;
            ensure(g >= f - 1e-10 * f.abs(), || format!("instance {seed}: surrogate below f"))?;
            points += 1;
        }
    }
    Ok(format!("{points} points majorized, anchors tight"))
}

fn kkt(y: f64, b: f64, c: f64, h: f64, z: f64) -> f64 {
    let barrier = if y > 0.0 { y / z } else { 0.0 };
    c + 2.0 * h * z + b - barrier - h
}

fn dual_step_optimality() -> Result<String, String> {
    let config = SolverConfig::default();
    let mut r = rng(41);
    let mut worst: f64 = 0.0;
    let total = 100_000;
    for i in 0..total {
        let y = if i % 5 == 0 { 0.0 } else { r.random_range(0..2000) as f64 };
        let b = if i % 3 == 0 { 0.0 } else { r.random_range(0.0..5.0) };
        let h = if i % 7 == 0 { 0.0 } else { r.random_range(0.0..1.0f64).powi(3) * 500.0 };
        let mut cc = r.random_range(-500.0..500.0);
        if h == 0.0 && b + cc <= 1e-3 {
            // h = 0 needs a positive denominator for a finite maximizer
            cc = -b + r.random_range(1e-3..500.0);
        }
        let (z, guarded) = dual_step_scalar(y, b, cc, h, 0.0, config.denom_guard);
        ensure(!guarded, || format!("guard hit at y={y} b={b} c={cc} h={h}"))?;
        let slope = kkt(y, b, cc, h, z);
        if y == 0.0 && z == 0.0 {
            ensure(slope >= 0.0, || format!("y=0 boundary with negative slope at b={b} c={cc} h={h}"))?;
            continue;
        }
        let res = slope.abs() / (1.0 + y);
        ensure(res <= 1e-8, || format!("residual {res:e} at y={y} b={b} c={cc} h={h} z={z}"))?;
        worst = worst.max(res);
    }
    // shifted step equals the plain step on c - g and solves the shifted equation
    let n = 10_000;
    let y = RVector::from_fn(n, |i, _| if i % 5 == 0 { 0.0 } else { (i % 97) as f64 + 1.0 });
    let b = RVector::from_fn(n, |i, _| if i % 3 == 0 { 0.0 } else { 0.1 });
    let h = RVector::from_fn(n, |_, _| r.random_range(1e-3..50.0));
    let cv = RVector::from_fn(n, |_, _| r.random_range(-40.0..40.0));
    let g = RVector::from_fn(n, |_, _| r.random_range(-40.0..40.0));
    let (shifted, _) = reg_dual_step_z(&y, &b, &cv, &g, &h, &config);
    let plain = dual_step(&y, &b, &(&cv - &g), &h, &config).z;
    ensure(shifted == plain, || "shifted step differs from the step on c - g".into())?;
    for i in 0..n {
        if y[i] > 0.0 {
            let res = kkt(y[i], b[i], cv[i] - g[i], h[i], shifted[i]).abs() / (1.0 + y[i]);
            ensure(res <= 1e-8, || format!("shifted residual {res:e} at {i}"))?;
        }
    }
    Ok(format!("{total} tuples plus {n} shifted, worst residual {worst:.2e}"))
}

fn inner_loop_oracle() -> Result<String, String> {
    let config = SolverConfig { adaptive_inner: false, dual_restart: false, eta_inner: 1e-15, max_inner: 200_000, ..Default::default() };
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut r = rng(500 + seed);
        let k = r.random_range(1..=4);
        let n = r.random_range(k + 2..=12);
        let inst = random_instance(n, k, 0.1, 5.0, 500 + seed);
        // all counts positive keeps the oracle's optimum interior
        let y = inst.problem.y.map(|v| v + 1.0);
        let p = PoissonProblem::new(inst.problem.op.clone(), y, inst.problem.b.clone()).map_err(|e| e.to_string())?;
        let x = random_signal(k, &mut r) * c(2.0, 0.0);
        let state = IterateState::new(&p.op, x, RVector::from_element(n, 1.0)).map_err(|e| e.to_string())?;
        let out = inner_solve_dual(&state, &p, &config, f64::INFINITY);
        let oracle = dual_newton_oracle(&dense(&p.op), &state.d, &p.y, &p.b);
        let rel = (&out.z - &oracle).norm() / oracle.norm();
        ensure(rel <= 1e-5, || format!("seed {seed} (K={k}, N={n}): relative gap {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("20 instances, worst relative gap {worst:.2e}"))
}

fn stationarity() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (i, b) in [0.1, 0.1, 0.1, 0.0, 0.0].into_iter().enumerate() {
        let inst = random_instance(800, 20, b, 150.0, 600 + i as u64);
        let p = &inst.problem;
        let sol = spectral_solve(p, &SolverConfig::default()).map_err(|e| e.to_string())?;
        ensure(sol.trace.status == SolveStatus::Converged, || format!("instance {i}: {}", sol.trace.status))?;
        let grad = wirtinger_gradient(p, &sol.x).map_err(|e| e.to_string())?.norm();
        let ahy = p.op.adjoint_apply(&p.y.map(|v| c(v, 0.0))).map_err(|e| e.to_string())?.norm();
        let ratio = grad / (1.0 + ahy);
        ensure(ratio <= 1e-4, || format!("instance {i}: gradient ratio {ratio:e}"))?;
        worst = worst.max(ratio);
    }
    Ok(format!("5 instances, worst ||grad|| / (1 + ||A^H y||) = {worst:.2e}"))
}

fn recovery_quality() -> Result<String, String> {
    let base = ExperimentSpec { photon_scale: 150.0, trials: 50, seed: 7, ..Default::default() };
    let mean_counts = {
        let inst = random_instance(800, 20, 0.1, 150.0, 7);
        inst.problem.y.mean()
    };
    let single = run_experiment(&base).map_err(|e| e.to_string())?;
    let mut values: Vec<f64> = single.rows.iter().map(|r| r.nrmse).collect();
    ensure(values.iter().all(|v| v.is_finite()), || "a trial failed".into())?;
    let med = median(&mut values);
    ensure(med <= RANDOM_SETTING_MEDIAN_NRMSE, || format!("median {med:.4} above {RANDOM_SETTING_MEDIAN_NRMSE}"))?;
    let sweep = ExperimentSpec { mode: Mode::SweepN, n_list: vec![200, 400, 800, 1600], ..base };
    let out = run_experiment(&sweep).map_err(|e| e.to_string())?;
    let medians: Vec<f64> = out.summary.iter().map(|s| s.median_nrmse).collect();
    ensure(medians.windows(2).all(|w| w[1] <= w[0]), || format!("medians not non-increasing: {medians:?}"))?;
    let shown: Vec<String> = medians.iter().map(|m| format!("{m:.4}")).collect();
    Ok(format!("mean count {mean_counts:.0}, median {med:.4}, sweep medians [{}]", shown.join(", ")))
}

fn zero_background() -> Result<String, String> {
    let config = SolverConfig::default();
    let mut zeros = 0;
    for seed in 0..50 {
        let inst = random_instance(800, 20, 0.0, 1.0, seed);
        zeros += inst.problem.y.iter().filter(|v| **v == 0.0).count();
        let sol = spectral_solve(&inst.problem, &config).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(sol.trace.records.iter().all(|r| r.objective.is_finite()), || format!("seed {seed}: infinite objective"))?;
        ensure(sol.trace.guarded_updates == 0, || format!("seed {seed}: {} guarded updates", sol.trace.guarded_updates))?;
    }
    Ok(format!("50 runs clean, {zeros} zero counts seen"))
}

fn image_tv() -> Result<String, String> {
    let start = Instant::now();
    let spec = ExperimentSpec { mode: Mode::ImageTv, side: 32, masks: 21, lambda: 8.0, trials: 1, ..Default::default() };
    let out = run_experiment(&spec).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let row = &out.rows[0];
    ensure(row.status != "failed", || "solve failed".into())?;
    ensure(row.nrmse <= 0.15, || format!("NRMSE {:.2}%", 100.0 * row.nrmse))?;
    ensure(secs <= 120.0, || format!("took {secs:.1} s"))?;
    Ok(format!("NRMSE {:.2}% in {secs:.1} s, {} outer iterations", 100.0 * row.nrmse, row.outer_iterations))
}

fn reductions() -> Result<String, String> {
    let config = SolverConfig::default();
    let mut worst: f64 = 0.0;
    for (i, (b, operator)) in [(0.1, OperatorKind::Random), (0.0, OperatorKind::Random), (0.1, OperatorKind::MaskedDft)]
        .into_iter()
        .enumerate()
    {
        let p = match operator {
            OperatorKind::Random => random_instance(300, 8, b, 50.0, 700 + i as u64).problem,
            OperatorKind::MaskedDft => {
                let mut r = rng(710);
                let op = pdmm::model::make_masked_dft_operator(16, 5, &mut r).map_err(|e| e.to_string())?;
                let x = random_signal(16, &mut r);
                let op = pdmm::model::normalize_operator(&op, &x).map_err(|e| e.to_string())?;
                let truth = pdmm::GroundTruth::new(x, 50.0).map_err(|e| e.to_string())?;
                let bv = RVector::from_element(op.rows(), b);
                pdmm::model::sample_measurements(&op, &truth, &bv, &mut r).map_err(|e| e.to_string())?
            }
        };
        let k = p.op.cols();
        let init = initialize(&p, PowerIterationOptions::default(), config.z_floor).map_err(|e| e.to_string())?;
        let mut plain = Vec::new();
        solve_observed(&p, &init.x0, &init.z0, &config, &mut |x: &CVector| {
            plain.push(x.clone());
            None
        })
        .map_err(|e| e.to_string())?;
        let kind = if operator == OperatorKind::Random { RegularizerKind::Diff1d } else { RegularizerKind::Identity };
        let reg = build_regularizer(kind, k, 0.0).map_err(|e| e.to_string())?;
        let mut zero_lambda = Vec::new();
        let w0 = CVector::zeros(reg.rows());
        solve_regularized_observed(&p, &reg, &init.x0, &init.z0, &w0, &config, &mut |x: &CVector| {
            zero_lambda.push(x.clone());
            None
        })
        .map_err(|e| e.to_string())?;
        ensure(plain.len() == zero_lambda.len(), || format!("case {i}: {} vs {} iterates", plain.len(), zero_lambda.len()))?;
        for (u, v) in plain.iter().zip(&zero_lambda) {
            worst = worst.max((u - v).norm() / u.norm());
        }
        ensure(worst <= 1e-12, || format!("case {i}: iterate gap {worst:e}"))?;

        // z = 1 makes the primal step reproduce the anchor
        let state = IterateState::new(&p.op, init.x0.clone(), init.z0.clone()).map_err(|e| e.to_string())?;
        let fixed = primal_step(&p.op, &state.d, &RVector::from_element(p.y.len(), 1.0)).map_err(|e| e.to_string())?;
        let gap = (&fixed - &init.x0).norm() / init.x0.norm();
        ensure(gap <= 1e-12, || format!("case {i}: primal fixed point gap {gap:e}"))?;
    }
    // g = 0 turns the shifted step into the plain one
    let mut r = rng(720);
    let n = 1000;
    let y = RVector::from_fn(n, |i, _| (i % 13) as f64);
    let b = RVector::from_element(n, 0.1);
    let h = RVector::from_fn(n, |i, _| if i % 9 == 0 { 0.0 } else { r.random_range(0.0..30.0) });
    let cv = RVector::from_fn(n, |_, _| r.random_range(0.0..30.0));
    let (shifted, _) = reg_dual_step_z(&y, &b, &cv, &RVector::zeros(n), &h, &config);
    ensure(shifted == dual_step(&y, &b, &cv, &h, &config).z, || "g = 0 step differs".into())?;
    Ok(format!("3 cases, worst iterate gap {worst:.1e}"))
}

fn determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_pdmm"))
            .args(["sweep-n", "--n-list", "200,400", "--trials", "6", "--seed", "3", "--no-timing", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        std::fs::read(&out).map_err(|e| e.to_string())
    };
    let (first, second) = (run("a.csv")?, run("b.csv")?);
    ensure(first == second, || "CSV output differs between runs".into())?;
    Ok(format!("{} identical bytes", first.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 11] = [
        ("monotone descent", monotone_descent),
        ("fenchel equivalence", fenchel_equivalence),
        ("surrogate majorization", surrogate_majorization),
        ("dual step optimality", dual_step_optimality),
        ("inner loop oracle", inner_loop_oracle),
        ("stationarity", stationarity),
        ("recovery quality", recovery_quality),
        ("zero background", zero_background),
        ("image tv recovery", image_tv),
        ("reduction identities", reductions),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({reason})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
