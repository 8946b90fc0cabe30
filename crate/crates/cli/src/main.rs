//! `msturm`: focal instants, index verification and trivialization from the
//! command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use morse_sturm::{Error, Tolerances};

/// Defaults that are not tolerances.
pub const DEFAULT_MESH: usize = 128;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_EPS: f64 = 1e-4;
pub const DEFAULT_TRIALS: usize = 8;
pub const DEFAULT_T_GRID: &str = "0.05:1:0.05";

#[derive(Parser, Debug)]
#[command(name = "msturm", version, about = "Focal instants and index formulas for Morse-Sturm systems")]
pub struct Cli {
    /// Print every default setting and exit.
    #[arg(long)]
    pub show_config: bool,

    #[command(flatten)]
    pub opts: Options,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
pub struct Options {
    /// Mesh size m (evolve), or the first mesh of the doubling schedule (verify).
    #[arg(long, global = true)]
    pub mesh: Option<usize>,
    #[arg(long, global = true)]
    pub ode_tol: Option<f64>,
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
    #[arg(long, global = true)]
    pub tol_eig: Option<f64>,
    #[arg(long, global = true)]
    pub refine_tol: Option<f64>,
    /// Evaluation grid `a:b:step` for `evolve`.
    #[arg(long, global = true)]
    pub t_grid: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Perturbation size for `perturb` and `maslov`.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Focal table `t, multiplicity, signature, degenerate`.
    Focal {
        input: PathBuf,
        /// Also write the `det` and `sigma_min` traces.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Every term of the index formula as a JSON report.
    Verify { input: PathBuf },
    /// Discrete index `i(t)` on a grid, followed by its jumps.
    Evolve {
        input: PathBuf,
        /// Write the jump table here instead of after the evolution table.
        #[arg(long)]
        jumps: Option<PathBuf>,
    },
    /// Maslov index, from the signature sum or from perturbed copies when `--eps` is set.
    Maslov { input: PathBuf },
    /// Perturbation trials and their agreement.
    Perturb { input: PathBuf },
    /// Parallel trivialization of a geodesic in a built-in chart.
    Trivialize(TrivializeArgs),
}

#[derive(Args, Debug)]
pub struct TrivializeArgs {
    /// One of `minkowski2`, `minkowski3`, `conformal_exp_t2`.
    #[arg(long)]
    pub chart: String,
    /// Parameter length of the geodesic.
    #[arg(long = "T", default_value_t = 1.0)]
    pub t_len: f64,
    /// Initial point, comma separated. Defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Initial velocity, comma separated. Defaults to the first coordinate vector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v0: Option<Vec<f64>>,
    /// Tangent vector of the initial submanifold, comma separated (repeatable).
    #[arg(long, allow_hyphen_values = true)]
    pub tangent: Vec<String>,
    /// Second fundamental form in the tangent basis, row-major.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub shape: Option<Vec<f64>>,
    /// Witness seed value in frame coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    /// Witness seed velocity in frame coordinates. Defaults to zero.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0_velocity: Option<Vec<f64>>,
}

impl Options {
    pub fn tolerances(&self) -> Result<Tolerances, Error> {
        let mut tol = Tolerances::default();
        if let Some(v) = self.ode_tol {
            tol.ode_tol = v;
        }
        if let Some(v) = self.tol_rank {
            tol.tol_rank = v;
        }
        if let Some(v) = self.tol_eig {
            tol.tol_eig = v;
        }
        if let Some(v) = self.refine_tol {
            tol.refine_tol = v;
        }
        tol.validate()?;
        if let Some(m) = self.mesh {
            if m < 2 {
                return Err(Error::InvalidInput("mesh must be >= 2".into()));
            }
        }
        Ok(tol)
    }
}

/// Failure with its exit code. The message goes to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

/// 1 input problems, 2 scan and computation errors, 3 witness not timelike,
/// 4 mesh schedule did not stabilize. Exit 5 (nonzero residual) is set by `verify`.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotTimelike { .. } => 3,
        Error::NotStabilized { .. } => 4,
        Error::UnresolvedRoot { .. }
        | Error::EndpointFocal
        | Error::EndpointDegenerate
        | Error::DegenerateFocalInstant { .. }
        | Error::NoAgreement { .. }
        | Error::AllTrialsDegenerate
        | Error::IntegrationFailure { .. }
        | Error::EmptyKernel
        | Error::LeftChart { .. }
        | Error::CurvatureAsymmetry { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
