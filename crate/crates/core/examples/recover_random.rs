//! Recover a signal from Poisson counts of a random complex operator.
//!
//! ```text
//! cargo run --release --example recover_random -- [seed]
//! ```

use pdmm::eval::nrmse;
use pdmm::init::initialize;
use pdmm::linops::PowerIterationOptions;
use pdmm::model::{make_random_operator, random_signal, sample_measurements};
use pdmm::pdmm::solve;
use pdmm::{DVector, GroundTruth, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run(seed: u64) -> pdmm::Result<f64> {
    let (k, n) = (20, 800);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let op = make_random_operator(n, k, &mut rng)?;
    let truth = GroundTruth::new(random_signal(k, &mut rng), 150.0)?;
    let problem = sample_measurements(&op, &truth, &DVector::from_element(n, 0.1), &mut rng)?;

    let config = SolverConfig::default();
    let init = initialize(&problem, PowerIterationOptions::default(), config.z_floor)?;
    let start_err = nrmse(&init.x0, &truth.effective_signal())?;
    let sol = solve(&problem, &init.x0, &init.z0, &config)?;
    let err = nrmse(&sol.x, &truth.effective_signal())?;

    println!("mean count      {:.1}", problem.y.mean());
    println!("spectral NRMSE  {start_err:.4}");
    println!("final NRMSE     {err:.4}");
    println!("objective       {:.6e}", sol.trace.final_objective());
    println!("outer / inner   {} / {}", sol.trace.outer_iterations(), sol.trace.total_inner_iterations());
    println!("status          {}", sol.trace.status);
    Ok(err)
}

fn main() -> pdmm::Result<()> {
    let seed = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed must be an integer"));
    run(seed).map(|_| ())
}
