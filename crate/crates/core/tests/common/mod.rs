#![allow(dead_code)]

use pdmm::init::initialize;
use pdmm::linops::PowerIterationOptions;
use pdmm::model::{make_random_operator, random_signal, sample_measurements};
use pdmm::pdmm::Solution;
use pdmm::{CVector, Complex64, DMatrix, GroundTruth, PoissonProblem, RVector, SensingOperator, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random-setting instance: Uniform(0,1) complex operator, unit-norm signal,
/// Poisson counts.
pub struct Instance {
    pub problem: PoissonProblem,
    pub truth: GroundTruth,
}

pub fn random_instance(n: usize, k: usize, b: f64, photon_scale: f64, seed: u64) -> Instance {
    let mut r = rng(seed);
    let op = make_random_operator(n, k, &mut r).unwrap();
    let x = random_signal(k, &mut r);
    let truth = GroundTruth::new(x, photon_scale).unwrap();
    let problem = sample_measurements(&op, &truth, &RVector::from_element(n, b), &mut r).unwrap();
    Instance { problem, truth }
}

pub fn spectral_solve(problem: &PoissonProblem, config: &SolverConfig) -> pdmm::Result<Solution> {
    let init = initialize(problem, PowerIterationOptions::default(), config.z_floor)?;
    pdmm::pdmm::solve(problem, &init.x0, &init.z0, config)
}

pub fn dense(op: &SensingOperator) -> DMatrix<Complex64> {
    let k = op.cols();
    let mut m = DMatrix::zeros(op.rows(), k);
    for j in 0..k {
        let mut e = CVector::zeros(k);
        e[j] = c(1.0, 0.0);
        m.set_column(j, &op.apply(&e).unwrap());
    }
    m
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Unique minimizer of the strictly convex dual objective
/// `p(z) = ||P D z||^2 + sum z (b - |d|^2) - sum y log z` (all `y > 0`),
/// by damped Newton on an explicitly formed projector.
pub fn dual_newton_oracle(a: &DMatrix<Complex64>, d: &CVector, y: &RVector, b: &RVector) -> RVector {
    let n = a.nrows();
    let gram = a.adjoint() * a;
    let proj = a * gram.try_inverse().unwrap() * a.adjoint();
    // Q = Re(D^H P D), so ||P D z||^2 = z^T Q z for real z
    let q = DMatrix::from_fn(n, n, |i, j| (d[i].conj() * proj[(i, j)] * d[j]).re);
    let lin = RVector::from_fn(n, |i, _| b[i] - d[i].norm_sqr());
    let p = |z: &RVector| -> f64 {
        if z.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        (z.transpose() * &q * z)[(0, 0)] + lin.dot(z) - y.iter().zip(z.iter()).map(|(yi, zi)| yi * zi.ln()).sum::<f64>()
    };
    let mut z = RVector::from_element(n, 1.0);
    for _ in 0..500 {
        let grad = &q * &z * 2.0 + &lin - y.component_div(&z);
        let hess = &q * 2.0 + DMatrix::from_diagonal(&y.zip_map(&z, |yi, zi| yi / (zi * zi)));
        let step = hess.cholesky().unwrap().solve(&grad);
        let decrement = grad.dot(&step);
        if decrement < 1e-28 {
            break;
        }
        let mut t = 1.0;
        let base = p(&z);
        while p(&(&z - &step * t)) > base - 0.25 * t * decrement {
            t *= 0.5;
            if t < 1e-20 {
                break;
            }
        }
        z -= &step * t;
    }
    z
}
