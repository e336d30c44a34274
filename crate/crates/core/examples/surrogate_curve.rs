//! Objective and PDMM surrogate along one real coordinate.
//!
//! Two measurements of a scalar with true value 8; the surrogate is built
//! at x = 4. Prints `x, f(x), g(x | 4)` as CSV.

use pdmm::model::neg_log_likelihood;
use pdmm::pdmm::primal_surrogate_value;
use pdmm::{CVector, Complex64, DMatrix, DVector, DenseOperator, PoissonProblem};

pub fn run(points: usize) -> pdmm::Result<Vec<(f64, f64, f64)>> {
    let a = DMatrix::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)]);
    let problem = PoissonProblem::new(
        DenseOperator::new(a)?.into(),
        DVector::from_vec(vec![64.0, 16.0]),
        DVector::from_element(2, 0.1),
    )?;
    let anchor = CVector::from_element(1, Complex64::new(4.0, 0.0));
    let mut rows = Vec::with_capacity(points);
    println!("x,f,g");
    for i in 0..points {
        let v = 2.0 + 10.0 * i as f64 / (points - 1) as f64;
        let x = CVector::from_element(1, Complex64::new(v, 0.0));
        let f = neg_log_likelihood(&problem, &x)?;
        let g = primal_surrogate_value(&problem, &x, &anchor)?;
        println!("{v:.4},{f:.6},{g:.6}");
        rows.push((v, f, g));
    }
    Ok(rows)
}

fn main() -> pdmm::Result<()> {
    run(41).map(|_| ())
}
