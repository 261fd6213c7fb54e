use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod svg;

/// Kernel PCA with pre-image reconstruction.
///
/// CSV files hold one sample per row and one feature per column.
#[derive(Debug, Parser)]
#[command(name = "kpca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic manifold dataset.
    Gen(GenArgs),
    /// Fit a kernel PCA model.
    Fit(FitArgs),
    /// Map samples to reduced coordinates.
    Transform(TransformArgs),
    /// Reconstruct input-space points from reduced coordinates.
    Preimage(PreimageArgs),
    /// Map samples forward and back, reporting per-sample relative error.
    Roundtrip(RoundtripArgs),
    /// Print the eigenvalue spectrum and captured variance of a model.
    Eval(EvalArgs),
    /// Scatter plot of reduced coordinates (SVG, plus the plotted points as CSV).
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Circle,
    Helix,
    #[value(name = "closing_curve", alias = "closing-curve")]
    ClosingCurve,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Number of training samples.
    #[arg(long)]
    n: usize,
    /// Ambient dimension.
    #[arg(long)]
    dim: usize,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the held-out sample (one row).
    #[arg(long)]
    heldout: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Linear,
    Poly,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormalizationArg {
    Unit,
    Feature,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    kernel: KernelArg,
    /// Gaussian width, or `auto` for the median heuristic.
    #[arg(long, default_value = "auto")]
    beta: String,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 1.0)]
    offset: f64,
    /// Fraction of variance that may be discarded, in [0, 1).
    #[arg(long, conflicts_with = "k")]
    eps: Option<f64>,
    /// Reduced dimension.
    #[arg(long)]
    k: Option<usize>,
    /// Use the raw kernel matrix.
    #[arg(long)]
    no_center: bool,
    #[arg(long, value_enum, default_value = "unit")]
    normalization: NormalizationArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Residual,
    Log,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Invd,
    Invd2,
    Expd,
    /// Try every scheme and keep the lowest objective.
    Best,
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    /// Defaults to `log` for uncentered Gaussian models, `residual` otherwise.
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    /// Training samples allowed a nonzero weight (default: min(10, n)).
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long, value_enum, default_value = "invd2")]
    init: InitArg,
}

#[derive(Debug, Args)]
struct PreimageArgs {
    #[arg(long)]
    model: PathBuf,
    /// Reduced coordinates, one point per row.
    #[arg(long)]
    z: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
    /// Per-point solver diagnostics.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RoundtripArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    z: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
