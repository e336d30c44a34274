use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdmm::experiment::{run_and_write, ExperimentSpec, Mode, OperatorKind, RegChoice};
use pdmm::regularized::CurvatureMode;
use pdmm::SolverConfig;

#[derive(Parser)]
#[command(name = "pdmm", about = "PDMM experiments for Poisson phase retrieval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trials at one (K, N) point.
    Single(Options),
    /// Sweep over measurement counts.
    SweepN(Options),
    /// Sweep over signal lengths.
    SweepK(Options),
    /// Per-iteration time, NRMSE and objective.
    Trace(Options),
    /// TV-regularized recovery of an image from masked-DFT measurements.
    ImageTv(Options),
}

#[derive(Args)]
struct Options {
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 800)]
    n: usize,
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    k_list: Vec<usize>,
    #[arg(long, default_value_t = 21)]
    masks: usize,
    #[arg(long, default_value_t = 0.1)]
    b: f64,
    #[arg(long, default_value_t = 8.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    photon_scale: f64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    eta_outer: f64,
    #[arg(long, default_value_t = 1e-6)]
    eta_inner: f64,
    #[arg(long, default_value_t = 1000)]
    max_outer: usize,
    #[arg(long, default_value_t = 100)]
    max_inner: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    adaptive_inner: bool,
    #[arg(long, default_value = "none", value_parser = ["none", "l1-identity", "tv"])]
    reg: String,
    #[arg(long, default_value = "random", value_parser = ["random", "masked-dft"])]
    operator: String,
    #[arg(long, default_value = "eig", value_parser = ["eig", "trace"])]
    curvature: String,
    /// Image for image-tv (PGM); defaults to the bundled cameraman.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Crop side for image-tv.
    #[arg(long, default_value_t = 32)]
    side: usize,
    /// Write 0 in the seconds columns so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

fn build_spec(mode: Mode, o: Options) -> pdmm::Result<ExperimentSpec> {
    Ok(ExperimentSpec {
        mode,
        operator: o.operator.parse::<OperatorKind>()?,
        k: o.k,
        n: o.n,
        n_list: o.n_list,
        k_list: o.k_list,
        masks: o.masks,
        b_value: o.b,
        lambda: o.lambda,
        photon_scale: o.photon_scale,
        trials: o.trials,
        seed: o.seed,
        solver: SolverConfig {
            eta_outer: o.eta_outer,
            eta_inner: o.eta_inner,
            max_outer: o.max_outer,
            max_inner: o.max_inner,
            adaptive_inner: o.adaptive_inner,
            curvature: o.curvature.parse::<CurvatureMode>()?,
            ..SolverConfig::default()
        },
        reg: o.reg.parse::<RegChoice>()?,
        image: o.image,
        side: o.side,
        out: o.out,
        record_timing: !o.no_timing,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, options) = match cli.command {
        Command::Single(o) => (Mode::Single, o),
        Command::SweepN(o) => (Mode::SweepN, o),
        Command::SweepK(o) => (Mode::SweepK, o),
        Command::Trace(o) => (Mode::Trace, o),
        Command::ImageTv(o) => (Mode::ImageTv, o),
    };
    match build_spec(mode, options).and_then(|spec| run_and_write(&spec)) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
