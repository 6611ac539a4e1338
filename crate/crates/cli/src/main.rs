//! `htbif`: steady states of the diffusive Holling-Tanner system.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use htbif_core::linstab::Side;

const DEFAULTS: &str = "\
Defaults: b = 1, d = 1, a = c = const:1, n = 1, n-points = 2001.
Numerical tolerances (fixed): time-map quadrature 1e-10 relative, RK4 step
min(h/8, 1/16000) with energy drift < 1e-9, Newton residual 1e-9 with at most 50 iterations
and 20 step halvings, near-zero eigenvalue |tau| < 1e-6 (1 + |lambda|).
Precedence: command-line flag, then --config file, then default.";

#[derive(Parser, Debug)]
#[command(name = "htbif", version, about = "Steady states of the diffusive Holling-Tanner system", after_help = DEFAULTS)]
pub struct Cli {
    /// Run the desk-scale acceptance checks and print a pass/fail table
    #[arg(long)]
    pub seed_check: bool,
    /// TOML file with values for any long flag (kebab-case keys)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Roots lambda_l^± of the constant-state eigencurves (CSV or JSON)
    Eigencurves(EigencurvesArgs),
    /// Critical values mu_kappa for kappa = 0..=kappa-max (CSV or JSON)
    Critical(CriticalArgs),
    /// Time map T(w_-) on an interior grid of (0, w_0) (CSV or JSON)
    Timemap(TimemapArgs),
    /// The nodal pair of mode n at one (lambda, mu) (CSV or JSON)
    Nodal(NodalArgs),
    /// Loops C_1..C_kappa and the constant branch (CSV, JSON or SVG)
    Diagram(DiagramArgs),
    /// Morse indices of the constant and nodal branches across a window (CSV or JSON)
    Morse(MorseArgs),
    /// Local bifurcation expansion at lambda_n^± (JSON)
    Bifdir(BifdirArgs),
    /// Perturbed states grown from the constant and the mode-n pair (JSON)
    Perturb(PerturbArgs),
    /// All coexistence states grown from modes 0..=n (JSON)
    Census(PerturbArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Shape {
    /// Coefficient b [default: 1]
    #[arg(long)]
    pub b: Option<f64>,
    /// Coefficient d [default: 1]
    #[arg(long)]
    pub d: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Output {
    /// Output file [default: stdout]
    #[arg(long, short = 'o', value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct EigencurvesArgs {
    #[command(flatten)]
    pub shape: Shape,
    /// Diffusion ratio mu (required)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Largest mode l [default: a few past the last real root]
    #[arg(long)]
    pub ell_max: Option<u32>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub shape: Shape,
    /// Largest kappa [default: 3]
    #[arg(long)]
    pub kappa_max: Option<u32>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct TimemapArgs {
    #[command(flatten)]
    pub shape: Shape,
    /// Bifurcation parameter lambda (required)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Diffusion ratio mu (required)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Interior samples of (0, w_0) [default: 200]
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct NodalArgs {
    #[command(flatten)]
    pub shape: Shape,
    /// Mode number [default: 1]
    #[arg(long)]
    pub n: Option<u32>,
    /// Bifurcation parameter lambda (required)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Diffusion ratio mu (required)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Grid points on [0, 1], odd [default: 2001]
    #[arg(long)]
    pub n_points: Option<usize>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct DiagramArgs {
    #[command(flatten)]
    pub shape: Shape,
    /// Diffusion ratio mu (required)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Interior lambda samples per loop [default: 100]
    #[arg(long)]
    pub n_lambda: Option<usize>,
    /// Also write the SVG diagram here
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct MorseArgs {
    #[command(flatten)]
    pub shape: Shape,
    /// Mode number [default: 1]
    #[arg(long)]
    pub n: Option<u32>,
    /// Diffusion ratio mu (required)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Interior lambda samples of the window [default: 50]
    #[arg(long)]
    pub n_lambda: Option<usize>,
    /// Grid points on [0, 1], odd [default: 2001]
    #[arg(long)]
    pub n_points: Option<usize>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct BifdirArgs {
    #[command(flatten)]
    pub shape: Shape,
    /// Mode number [default: 1]
    #[arg(long)]
    pub n: Option<u32>,
    /// Diffusion ratio mu (required)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Window end: minus or plus (required)
    #[arg(long)]
    pub side: Option<Side>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub shape: Shape,
    /// Perturbation size eps (required)
    #[arg(long)]
    pub eps: Option<f64>,
    /// Bifurcation parameter lambda (required)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Diffusion ratio mu (required)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Mode number [default: 1]
    #[arg(long)]
    pub n: Option<u32>,
    /// Coefficient a(x): const:<v> or csv:<path> [default: const:1]
    #[arg(long)]
    pub a: Option<String>,
    /// Coefficient c(x): const:<v> or csv:<path> [default: const:1]
    #[arg(long)]
    pub c: Option<String>,
    /// Grid points on [0, 1], odd [default: 2001]
    #[arg(long)]
    pub n_points: Option<usize>,
    #[command(flatten)]
    pub out: Output,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("htbif: error: {e:#}");
            ExitCode::from(1)
        }
    }
}
