//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::montecarlo::{
    run_experiment, run_probe, summarize, sweep, with_workers, ChannelChoice, CombinerChoice, ExperimentConfig,
    ExperimentResult, SweepAxis,
};
use crate::network_model::CombinerWeights;
use crate::quantum_probe::{ClusterConfig, EstimationMode};
use crate::report::{experiment_table, probe_table, write_experiment_csv, write_probe_csv};
use crate::verify::run_verification;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qsense", version, about = "Entangled-cluster sensor network simulator and verifier")]
pub struct CliInvocation {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-cluster phase-estimation variance experiment.
    Probe(ProbeArgs),
    /// One end-to-end network experiment.
    Network(NetworkArgs),
    /// A network experiment repeated along one parameter axis.
    Sweep(SweepArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long = "ne")]
    pub n_e: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub phi: f64,
    #[arg(long, default_value = "ideal")]
    pub mode: String,
    /// Number of independent estimates drawn.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long = "ne")]
    pub n_e: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.0)]
    pub v: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "ideal")]
    pub mode: String,
    /// identity | optimal | gauss:<scale> | path to a K×K matrix file
    #[arg(long, default_value = "identity")]
    pub h: String,
    /// optimal | uniform | path to a K-entry vector file
    #[arg(long, default_value = "optimal")]
    pub g: String,
    /// Phase used to design g and H (defaults to the true phase).
    #[arg(long = "design-phi")]
    pub design_phi: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    /// K | N_e | r | v | phi
    #[arg(long)]
    pub axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub values: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed invocation, tagged with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: PathBuf, reason: String },
    VerificationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::VerificationFailed(_) => EXIT_VERIFY_FAILED,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io { path, reason } => write!(f, "{}: {reason}", path.display()),
            CliError::VerificationFailed(n) => write!(f, "{n} check(s) failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<CliInvocation, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    CliInvocation::try_parse_from(argv)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io { path: path.to_path_buf(), reason: e.to_string() }
}

fn read_numbers(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{}: cannot parse '{tok}' as a number", path.display())))
        })
        .collect()
}

/// Reads a whitespace-separated, row-major `k×k` matrix.
pub fn read_matrix_file(path: &Path, k: usize) -> Result<DMatrix<f64>, CliError> {
    let nums = read_numbers(path)?;
    if nums.len() != k * k {
        return Err(CliError::Usage(format!(
            "{}: expected {} entries for a {k}x{k} matrix, found {}",
            path.display(),
            k * k,
            nums.len()
        )));
    }
    Ok(DMatrix::from_row_slice(k, k, &nums))
}

pub fn read_vector_file(path: &Path, k: usize) -> Result<DVector<f64>, CliError> {
    let nums = read_numbers(path)?;
    if nums.len() != k {
        return Err(CliError::Usage(format!(
            "{}: expected {k} entries, found {}",
            path.display(),
            nums.len()
        )));
    }
    Ok(DVector::from_vec(nums))
}

fn parse_channel(spec: &str, k: usize) -> Result<ChannelChoice, CliError> {
    match spec {
        "identity" => Ok(ChannelChoice::Identity),
        "optimal" => Ok(ChannelChoice::OptimalForG),
        s if s.starts_with("gauss:") => {
            let scale: f64 = s["gauss:".len()..]
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid gaussian scale in '{s}'")))?;
            Ok(ChannelChoice::RandomGaussian { scale })
        }
        path => Ok(ChannelChoice::Matrix(read_matrix_file(Path::new(path), k)?)),
    }
}

fn parse_combiner(spec: &str, k: usize) -> Result<CombinerChoice, CliError> {
    match spec {
        "optimal" => Ok(CombinerChoice::Optimal),
        "uniform" => Ok(CombinerChoice::UniformAverage),
        path => Ok(CombinerChoice::Weights(CombinerWeights::new(read_vector_file(Path::new(path), k)?)?)),
    }
}

fn experiment_config(args: &NetworkArgs) -> Result<ExperimentConfig, CliError> {
    let mode: EstimationMode = args.mode.parse()?;
    let cluster = ClusterConfig::new(args.n_e, args.r, args.phi, mode)?;
    Ok(ExperimentConfig {
        cluster,
        k_clusters: args.k,
        channel: parse_channel(&args.h, args.k)?,
        noise_variance: args.v,
        combiner: parse_combiner(&args.g, args.k)?,
        trials: args.trials,
        seed: args.seed,
        design_phase: args.design_phi,
    })
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => with_workers(n, f),
        None => f(),
    }
}

fn emit<W: Write>(
    out_path: &Option<PathBuf>,
    stdout: &mut W,
    csv: impl FnOnce(&mut dyn Write) -> csv::Result<()>,
    table: String,
) -> Result<(), CliError> {
    match out_path {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            let mut w = BufWriter::new(file);
            csv(&mut w).map_err(|e| io_err(path, e))?;
            w.flush().map_err(|e| io_err(path, e))?;
            Ok(())
        }
        None => stdout.write_all(table.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn run_network(args: &NetworkArgs) -> Result<ExperimentResult, CliError> {
    let cfg = experiment_config(args)?;
    Ok(in_pool(args.workers, || run_experiment(&cfg))?)
}

/// Executes an invocation, writing tables to `stdout`.
pub fn execute<W: Write>(invocation: &CliInvocation, stdout: &mut W) -> Result<(), CliError> {
    match &invocation.command {
        Command::Probe(a) => {
            let mode: EstimationMode = a.mode.parse()?;
            let cfg = ClusterConfig::new(a.n_e, a.r, a.phi, mode)?;
            let res = in_pool(a.workers, || run_probe(&cfg, a.trials, a.seed))?;
            let table = probe_table(std::slice::from_ref(&res));
            emit(&a.out, stdout, |w| write_probe_csv(w, std::slice::from_ref(&res)), table)
        }
        Command::Network(a) => {
            let res = run_network(a)?;
            let table = experiment_table(std::slice::from_ref(&res));
            emit(&a.out, stdout, |w| write_experiment_csv(w, std::slice::from_ref(&res)), table)
        }
        Command::Sweep(a) => {
            let axis: SweepAxis = a.axis.parse()?;
            let base = experiment_config(&a.network)?;
            let results = in_pool(a.network.workers, || sweep(&base, axis, &a.values))?;
            let mut table = experiment_table(&results);
            if let Ok(s) = summarize(&results) {
                let fmt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
                table.push_str(&format!(
                    "slope vs {}: empirical {}, analytic {}, closed form {}; max |emp-analytic| = {:.2} stderr\n",
                    axis.as_str(),
                    fmt(s.slope_empirical),
                    fmt(s.slope_analytic),
                    fmt(s.slope_closed_form),
                    s.max_abs_deviation
                ));
            }
            emit(&a.network.out, stdout, |w| write_experiment_csv(w, &results), table)
        }
        Command::Verify(a) => {
            let report = in_pool(a.workers, || run_verification(a.seed))?;
            let mut table = report.table();
            table.push_str(&format!("{} passed, {} failed\n", report.passed(), report.failed()));
            if report.all_passed() {
                table.push_str("all checks passed\n");
            }
            let summary = format!("{} passed, {} failed\n", report.passed(), report.failed());
            let to_file = a.out.is_some();
            emit(&a.out, stdout, |w| report.write_csv(w), table)?;
            if to_file {
                stdout.write_all(summary.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))?;
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::VerificationFailed(report.failed()))
            }
        }
    }
}

/// Parses and runs `argv`, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let invocation = match parse_args(argv) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&invocation, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("qsense: {e}");
            e.exit_code()
        }
    }
}
