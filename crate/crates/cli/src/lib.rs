//! `pvh` command-line front end. [`run`] parses arguments, dispatches to a
//! subcommand and maps failures to exit codes: 0 success, 1 user error,
//! 2 numerical failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pvh_core::ipm::SolverOptions;
use pvh_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "PVH_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "pvh",
    version,
    about = "Moment-SOS lower bounds, certificates and degree-bound calculators"
)]
pub struct Cli {
    /// Write the report as JSON instead of CSV or text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the hierarchy for k = 0..=kmax and print the bound trace.
    Solve(SolveArgs),
    /// Degree-bound calculators.
    Bounds(BoundsArgs),
    /// Build the positive definite form F for one constraint and report every constant.
    Construct(ConstructArgs),
    /// Bernstein approximation error against its guarantee.
    Bernstein(BernsteinArgs),
    /// Sampled relaxations of a built-in black-box problem.
    Continuous(ContinuousArgs),
    /// Re-check a certificate against a problem.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative residual tolerance of the interior point solver.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Per-iteration residual trace on standard error.
    #[arg(long)]
    pub verbose: bool,
}

impl SolverArgs {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.tol,
            max_iter: self.max_iter,
            verbose: self.verbose,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub kmax: u32,
    /// Perturbation ε; defaults to `options.eps` in the problem file, then 0.
    /// With eps = 0 on a compact set, shift f by ε yourself for the ε-only variant.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Known minimum, used for the heuristic convergence slope.
    #[arg(long, allow_hyphen_values = true)]
    pub fstar: Option<f64>,
    /// Write the certificates of every solved order to this JSON file.
    #[arg(long)]
    pub certificates: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// A certificate object or an array of them, as written by `solve`.
    #[arg(long)]
    pub certificate: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub reznick: bool,
    #[arg(long)]
    pub polya: bool,
    #[arg(long)]
    pub schmudgen: bool,
    #[arg(long)]
    pub nie_schweighofer: bool,
    /// Number of variables.
    #[arg(long)]
    pub n: Option<usize>,
    /// Half degree of the form for the Reznick bound.
    #[arg(long)]
    pub d: Option<u32>,
    /// Degree of the form for the Pólya bound.
    #[arg(long)]
    pub degree: Option<u32>,
    /// Sphere ratio sup/inf of the form.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub norm_p: Option<f64>,
    #[arg(long)]
    pub min_simplex: Option<f64>,
    /// Degree of the objective.
    #[arg(long)]
    pub d_f: Option<u32>,
    #[arg(long)]
    pub norm_f: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub fstar: Option<f64>,
    /// Unknown constant of the Schmüdgen and Nie–Schweighofer bounds.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Form as a JSON term list; fills n, d and theta (sampled estimate).
    #[arg(long)]
    pub form: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Objective form as a JSON term list, or a problem file.
    #[arg(long)]
    pub objective: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Use the ice-cream constraint x_n^2 - x_1^2 - ... - x_{n-1}^2.
    #[arg(long, conflicts_with = "constraint")]
    pub icecream: bool,
    /// Constraint form as a JSON term list.
    #[arg(long)]
    pub constraint: Option<PathBuf>,
    /// Number of variables when it cannot be read off the term lists.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 40, conflicts_with = "no_cap")]
    pub u_cap: u64,
    /// Use the formula value of u; fails when it is astronomically large.
    #[arg(long)]
    pub no_cap: bool,
    #[arg(long, default_value_t = 101)]
    pub grid_res: usize,
    #[arg(long)]
    pub anchor_res: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub sphere_points: usize,
    /// Łojasiewicz exponent of a general constraint.
    #[arg(long, requires = "loj_c")]
    pub loj_alpha: Option<f64>,
    #[arg(long, requires = "loj_alpha")]
    pub loj_c: Option<f64>,
    /// Also search K = 0..=cap for the smallest certified Reznick order of F.
    #[arg(long)]
    pub reznick_search: Option<u32>,
    /// Largest Gram dimension tried by the Reznick search.
    #[arg(long, default_value_t = 400)]
    pub max_dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Unit,
    Symmetric,
}

#[derive(Debug, Args)]
pub struct BernsteinArgs {
    /// Built-in test function; its objective is approximated.
    #[arg(long, default_value = "abs")]
    pub function: String,
    /// Degrees per axis.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
    pub k: Vec<u32>,
    #[arg(long, value_enum, default_value_t = DomainArg::Symmetric)]
    pub domain: DomainArg,
    /// Points per axis of the error measurement grid.
    #[arg(long)]
    pub eval_res: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Sdp,
    Qc,
}

#[derive(Debug, Args)]
pub struct ContinuousArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Built-in test function.
    #[arg(long, default_value = "quad")]
    pub function: String,
    /// Grid points per axis; a comma list sweeps.
    #[arg(long, value_delimiter = ',', default_value = "21")]
    pub resolution: Vec<usize>,
    /// Relaxation orders; a comma list sweeps.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub k: Vec<u32>,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Failure of a subcommand, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    User(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::User(_) => EXIT_USER,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::User(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotPsd { .. } | Error::PositivityViolation { .. } | Error::Solver(_) => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::User(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::User(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::User(e.to_string())
    }
}

pub type Outcome = std::result::Result<i32, Failure>;

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USER
                }
            };
        }
    };
    if let Err(f) = configure_threads() {
        let _ = writeln!(err, "error: {}", f.message());
        return f.code();
    }
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a, cli.json, out, err),
        Command::Bounds(a) => commands::bounds(a, cli.json, out, err),
        Command::Construct(a) => commands::construct(a, out, err),
        Command::Bernstein(a) => commands::bernstein(a, cli.json, out, err),
        Command::Continuous(a) => commands::continuous(a, cli.json, out, err),
        Command::Verify(a) => commands::verify(a, cli.json, out, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::User(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
    // Fails only when the pool already exists, as in repeated in-process runs.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
