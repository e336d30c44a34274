//! Per-iteration objective and NRMSE through the solver observer.

use pdmm::eval::nrmse;
use pdmm::init::initialize;
use pdmm::linops::PowerIterationOptions;
use pdmm::model::{make_random_operator, random_signal, sample_measurements};
use pdmm::pdmm::solve_observed;
use pdmm::{CVector, DVector, GroundTruth, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run(b: f64) -> pdmm::Result<Vec<(f64, f64)>> {
    let (k, n) = (20, 400);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let op = make_random_operator(n, k, &mut rng)?;
    let truth = GroundTruth::new(random_signal(k, &mut rng), 150.0)?;
    let problem = sample_measurements(&op, &truth, &DVector::from_element(n, b), &mut rng)?;
    let reference = truth.effective_signal();

    let config = SolverConfig::default();
    let init = initialize(&problem, PowerIterationOptions::default(), config.z_floor)?;
    let mut observer = |x: &CVector| nrmse(x, &reference).ok();
    let sol = solve_observed(&problem, &init.x0, &init.z0, &config, &mut observer)?;

    println!("iter  inner  objective           nrmse");
    for r in &sol.trace.records {
        println!("{:4}  {:5}  {:<18.10e}  {:.5}", r.iteration, r.inner_iterations, r.objective, r.metric.unwrap_or(f64::NAN));
    }
    Ok(sol.trace.records.iter().map(|r| (r.objective, r.metric.unwrap_or(f64::NAN))).collect())
}

fn main() -> pdmm::Result<()> {
    let b = std::env::args().nth(1).map_or(0.1, |s| s.parse().expect("b must be a number"));
    run(b).map(|_| ())
}
