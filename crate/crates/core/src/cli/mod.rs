//! `qfals` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input, 3 a check failed.

mod commands;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use report::{Check, Report, Timing, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;
/// Largest total Hilbert-space dimension accepted by `verify` and `falsify`.
pub const MAX_TOTAL_DIM: usize = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invalid(_) => EXIT_INVALID,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<Vec<crate::circuit::DslError>> for CliError {
    fn from(errs: Vec<crate::circuit::DslError>) -> Self {
        let lines: Vec<String> = errs.iter().map(|e| format!("[{}] {e}", e.category())).collect();
        CliError::Invalid(lines.join("\n"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "qfals", version, about = "Quantum operations, dilations, twirls and falsifier searches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Numerical tolerance for validity checks and witnesses.
    #[arg(long, global = true, env = "QFALS_TOL")]
    pub tol: Option<f64>,
    /// Root seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Worker threads for Monte Carlo averages.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Write the JSON report to this path.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    Purity,
    PurityNcopies,
    Atomicity,
    MaxEntanglement,
    Isometricity,
    MarginalOfPure,
    UnitaryRealization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Purity,
    PurityNcopies,
    MaxEntangled,
    MarginalOfPure,
    Atomic,
    Isometric,
    Support,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DimArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    /// Second factor dimension for bipartite families (defaults to --dim).
    #[arg(long = "dim-b")]
    pub dim_b: Option<usize>,
    #[arg(long)]
    pub copies: Option<usize>,
    #[arg(long)]
    pub din: Option<usize>,
    #[arg(long)]
    pub dout: Option<usize>,
    #[arg(long)]
    pub outcomes: Option<usize>,
    /// Environment dimension (marginal-of-pure, purify).
    #[arg(long)]
    pub env: Option<usize>,
    /// Density matrix JSON file (marginal-of-pure).
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SearchArgs {
    /// Samples per span batch in the falsifier search.
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long = "max-iter", default_value_t = crate::falsification::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Residual tolerance of the falsifier search.
    #[arg(long = "search-tol", default_value_t = crate::falsification::DEFAULT_SEARCH_TOL)]
    pub search_tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the witness and search suite for one unfalsifiability statement.
    Verify {
        #[arg(value_enum)]
        theorem: Theorem,
        #[command(flatten)]
        dims: DimArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Purify a density matrix.
    Purify {
        /// Density matrix JSON file.
        input: PathBuf,
        #[arg(long)]
        env: Option<usize>,
    },
    /// Build a unitary realization of an instrument and check the round trip.
    Dilate {
        /// Instrument JSON file (array of Kraus lists); random when absent.
        input: Option<PathBuf>,
        #[arg(long)]
        din: Option<usize>,
        #[arg(long)]
        dout: Option<usize>,
        #[arg(long)]
        outcomes: Option<usize>,
    },
    /// Haar twirl of an operator on one factor.
    Twirl {
        /// Operator JSON file; defaults to the canonical maximally entangled projector.
        input: Option<PathBuf>,
        /// Factor dimensions, e.g. `2,2`.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        factor: usize,
        /// Report the closed-form twirl only.
        #[arg(long)]
        analytic: bool,
        /// Monte Carlo sample count (overrides --samples).
        #[arg(long)]
        mc: Option<usize>,
    },
    /// Witness and falsifier search for a hypothesis family.
    Falsify {
        #[arg(value_enum)]
        family: FamilyName,
        #[command(flatten)]
        dims: DimArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Basis indices spanning the support (family `support`), e.g. `0,2`.
        #[arg(long, value_delimiter = ',')]
        support: Option<Vec<usize>>,
    },
    /// Evaluate the runs of a `.qc` circuit program.
    Run {
        file: PathBuf,
        /// Evaluate only this run.
        #[arg(long)]
        run: Option<String>,
    },
}

/// Executes a parsed command line and returns its report.
pub fn execute(cli: &Cli, argv: &[String]) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut report = commands::dispatch(cli)?;
    // program name instead of its path, so reports do not depend on the install location
    report.command = std::iter::once("qfals".to_string()).chain(argv.iter().skip(1).cloned()).collect();
    report.timing = Timing { total_ms: start.elapsed().as_secs_f64() * 1e3 };
    Ok(report)
}

/// Full CLI behavior: parses `args`, runs, prints, writes `--json`, and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &argv) {
        Ok(report) => {
            print!("{}", report.summary());
            if let Some(path) = &cli.common.json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                if let Err(e) = std::fs::write(path, text + "\n") {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return EXIT_INVALID;
                }
            }
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
