//! TV-regularized recovery of the bundled cameraman crop.
//!
//! ```text
//! cargo run --release --example tv_image -- [side] [out.pgm]
//! ```
//!
//! `side` defaults to 32. The full 128x128 image takes about a minute.

use std::path::PathBuf;

use pdmm::experiment::{run_experiment, ExperimentSpec, Mode};
use pdmm::pgm::{write_image, PgmEncoding};

pub fn run(side: usize, out: Option<PathBuf>) -> pdmm::Result<f64> {
    let spec = ExperimentSpec { mode: Mode::ImageTv, side, masks: 21, lambda: 8.0, trials: 1, ..Default::default() };
    let result = run_experiment(&spec)?;
    let row = &result.rows[0];
    println!("{side}x{side}: NRMSE {:.2}%  outer {}  {:.1} s", 100.0 * row.nrmse, row.outer_iterations, row.seconds);
    if let (Some(path), Some(image)) = (out, &result.image) {
        write_image(&path, image, PgmEncoding::Binary)?;
        println!("wrote {}", path.display());
    }
    Ok(row.nrmse)
}

fn main() -> pdmm::Result<()> {
    let mut args = std::env::args().skip(1);
    let side = args.next().map_or(32, |s| s.parse().expect("side must be an integer"));
    run(side, args.next().map(PathBuf::from)).map(|_| ())
}
