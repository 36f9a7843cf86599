//! `fdrlab` command-line tool.
//!
//! Exit status: 0 on success, 2 for malformed input or flags, 3 when the
//! data are statistically degenerate for the requested method.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<fdrlab::Error> for CliError {
    fn from(e: fdrlab::Error) -> Self {
        match e {
            fdrlab::Error::Degenerate(_) => Self {
                code: 3,
                message: format!("{e}\nhint: a fixed λ such as `--method storey:0.5` avoids the data-driven grid"),
            },
            fdrlab::Error::Numeric(_) => Self { code: 1, message: e.to_string() },
            _ => Self { code: 2, message: e.to_string() },
        }
    }
}

const METHOD_HELP: &str = "Method descriptor: std | orc[:<pi0>] | by | storey:<lambda> | \
as[:plain|:robust][:lmax=<v|none>][:delta=<v|auto|auto<K>>]. \
`as` alone means the robust rule capped at 0.8 with δ = 50/#{p ≥ q}.";

#[derive(Parser, Debug)]
#[command(name = "fdrlab", version, about = "Adaptive Benjamini–Hochberg with stopping-time null-proportion estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct MethodArgs {
    /// Target FDR level.
    #[arg(long, default_value_t = 0.2)]
    q: f64,
    #[arg(long, default_value = "as", help = METHOD_HELP)]
    method: String,
    /// Report format.
    #[arg(long, value_enum, default_value_t = commands::Format::Json)]
    format: commands::Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a method on a p-value file and report the rejections.
    ///
    /// The file holds either bare numbers (one or more per line, separated by
    /// commas or whitespace) or a CSV with a `pvalue` column and an optional
    /// `is_null` column. Indices in the report are 0-based positions in the file.
    Reject {
        /// Input file, or `-` for stdin.
        input: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Storey's estimate and the adaptive BH rejection count along a λ grid.
    ///
    /// Writes CSV rows `lambda,pi0,rejections`, increasing in λ.
    Profile {
        input: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        q: f64,
        /// Grid spacing; the grid is q, q+δ, … below 1.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Explicit comma-separated grid, overriding --delta.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Monte Carlo study of the method roster on one simulation scenario.
    ///
    /// Scenarios: a (500 tests, 50 shifted by 2), b (500 tests, 400 with
    /// shifts rising to 1.5), c (10⁴ tests screened at 0.05 on an independent
    /// batch), d (500 tests, 250 Beta(3,1) nulls, 250 shifted by 2).
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        q: f64,
        /// Comma-separated method descriptors; defaults to
        /// std,orc,by,storey:0.2,storey:0.5,storey:0.8,as.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write replication 0's batch as `pvalue,is_null` CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Conformal p-values from a score file, then the same report as `reject`.
    ///
    /// The CSV needs `score` and `role` columns, role being `test` or `nc`
    /// (negative control); an `is_null` column on test rows is optional. Larger
    /// scores are stronger evidence. A test score gets
    /// p = (1 + #{nc scores ≥ score})/(1 + #nc), so ties with controls count
    /// against the test point.
    Conformal {
        input: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Quartiles of the stopped estimate as the number of tests grows.
    Convergence {
        /// Comma-separated scenarios among a, b, d.
        #[arg(long, value_delimiter = ',', default_value = "a,b,d")]
        scenarios: Vec<String>,
        /// Sizes: `start:stop:step` or a comma-separated list.
        #[arg(long, default_value = "40:160:40")]
        n: String,
        #[arg(long, default_value_t = 4000)]
        reps: usize,
        /// δ = target/#{p ≥ q}.
        #[arg(long, default_value_t = 10)]
        delta_target: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo check of the supermartingale bound under uniform nulls.
    Audit {
        #[arg(long, default_value_t = 200)]
        n0: usize,
        /// Comma-separated increasing grid in [q, 1); the first point is q.
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        t_grid: Vec<f64>,
        #[arg(long, default_value_t = 50_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FDRLAB_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::input(format!("FDRLAB_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::io(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Reject { input, method } => commands::reject(&input, method.q, &method.method, method.format),
        Command::Profile { input, q, delta, lambdas } => commands::profile(&input, q, delta, lambdas),
        Command::Simulate { scenario, reps, seed, q, methods, out, dump } => {
            commands::simulate(&scenario, reps, seed, q, methods, out.as_deref(), dump.as_deref())
        }
        Command::Conformal { input, method } => commands::conformal(&input, method.q, &method.method, method.format),
        Command::Convergence { scenarios, n, reps, delta_target, seed, q, out } => {
            commands::convergence(&scenarios, &n, reps, delta_target, seed, q, out.as_deref())
        }
        Command::Audit { n0, t_grid, reps, seed, out } => commands::audit(n0, t_grid, reps, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
