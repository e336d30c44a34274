//! Monte Carlo sweep over the number of measurements, written to CSV.
//!
//! ```text
//! cargo run --release --example sweep -- [trials] [out.csv]
//! ```

use std::path::PathBuf;

use pdmm::experiment::{run_experiment, sibling_path, write_csv, write_summary, ExperimentSpec, Mode, SummaryRow};

pub fn run(trials: usize, out: Option<PathBuf>) -> pdmm::Result<Vec<SummaryRow>> {
    let spec = ExperimentSpec {
        mode: Mode::SweepN,
        n_list: vec![200, 400, 800, 1600],
        photon_scale: 150.0,
        trials,
        seed: 7,
        ..Default::default()
    };
    let output = run_experiment(&spec)?;
    if let Some(path) = out {
        let summary_path = sibling_path(&path, "summary", "csv");
        write_csv(&output.rows, &path)?;
        write_summary(&output.summary, &summary_path)?;
        println!("wrote {} and {}", path.display(), summary_path.display());
    }
    let summary = output.summary;
    println!("   N  median NRMSE  mean NRMSE  failed");
    for s in &summary {
        println!("{:4}  {:12.4}  {:10.4}  {:6}", s.n, s.median_nrmse, s.mean_nrmse, s.failed);
    }
    Ok(summary)
}

fn main() -> pdmm::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().map_or(50, |s| s.parse().expect("trials must be an integer"));
    run(trials, args.next().map(PathBuf::from)).map(|_| ())
}
