//! Command-line front end: `analyze`, `compress`, `oracle`, `bench`, `gen`.
//!
//! Exit codes are the machine contract: 0 success, 2 bad input or I/O
//! failure, 3 uncertified analysis, 4 compression residual above tolerance,
//! 5 disagreement between independent classifiers. Human-readable text goes
//! to stderr.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stablerelu::netio::{load_dataset, load_domain, load_network, Dataset, InputDomain, Network};
use stablerelu::stability::{IsaConfig, IsaMode};

pub mod analyze;
pub mod bench;
pub mod compress;
pub mod gen;
pub mod oracle;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNCERTIFIED: i32 = 3;
pub const EXIT_RESIDUAL: i32 = 4;
pub const EXIT_DISAGREE: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(stablerelu::Error),
    Io(PathBuf, std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<stablerelu::Error> for CliError {
    fn from(e: stablerelu::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

#[derive(Debug, Parser)]
#[command(
    name = "stablerelu",
    version,
    about = "Stable-neuron analysis and exact compression of ReLU networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Identify stable neurons and write a stability report.
    Analyze(analyze::AnalyzeArgs),
    /// Analyze, compress exactly, and verify the result.
    Compress(compress::CompressArgs),
    /// Cross-check ISA against exhaustive pattern enumeration.
    Oracle(oracle::OracleArgs),
    /// Compare ISA with the per-neuron baseline over a directory of instances.
    Bench(bench::BenchArgs),
    /// Generate random test instances.
    Gen(gen::GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    SingleCall,
    Sequential,
    PreprocessOnly,
}

impl From<ModeArg> for IsaMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SingleCall => IsaMode::SingleCall,
            ModeArg::Sequential => IsaMode::Sequential,
            ModeArg::PreprocessOnly => IsaMode::PreprocessOnly,
        }
    }
}

/// Inputs shared by every command that analyzes one network.
#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Network JSON.
    #[arg(long)]
    pub network: PathBuf,
    /// Input domain JSON.
    #[arg(long)]
    pub domain: PathBuf,
    /// Headerless CSV of domain points used as preprocessing witnesses.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "single-call")]
    pub mode: ModeArg,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the domain's input-sum interval.
    #[arg(long, value_parser = parse_pair, value_name = "LO,HI")]
    pub sum_bounds: Option<(f64, f64)>,
    /// Drop the input-sum interval before solving.
    #[arg(long)]
    pub ignore_sum: bool,
}

pub fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((lo, hi))
}

pub struct Instance {
    pub network: Network,
    pub network_bytes: Vec<u8>,
    pub domain: InputDomain,
    pub dataset: Dataset,
}

impl InstanceArgs {
    pub fn isa_config(&self) -> CliResult<IsaConfig> {
        let time_limit = match self.time_limit {
            None => None,
            Some(t) if t.is_finite() && t > 0.0 => Some(Duration::from_secs_f64(t)),
            Some(t) => {
                return Err(CliError::Usage(format!(
                    "--time-limit must be positive, got {t}"
                )))
            }
        };
        Ok(IsaConfig {
            mode: self.mode.into(),
            time_limit,
            use_sum_constraint: !self.ignore_sum,
            seed: self.seed,
            random_probes: 0,
        })
    }

    pub fn load(&self) -> CliResult<Instance> {
        if self.mode == ModeArg::PreprocessOnly && self.dataset.is_none() {
            return Err(CliError::Usage(
                "--mode preprocess-only needs --dataset".into(),
            ));
        }
        let network_bytes =
            std::fs::read(&self.network).map_err(|e| CliError::Io(self.network.clone(), e))?;
        let network = load_network(&self.network)?;
        let mut domain = load_domain(&self.domain)?;
        if let Some(bounds) = self.sum_bounds {
            domain = domain.with_sum_bounds(Some(bounds))?;
        }
        let dataset = match &self.dataset {
            Some(p) => load_dataset(p, &domain)?,
            None => Dataset::empty(),
        };
        Ok(Instance {
            network,
            network_bytes,
            domain,
            dataset,
        })
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Analyze(a) => analyze::cmd_analyze(a),
        Command::Compress(a) => compress::cmd_compress(a).map(|o| o.exit_code),
        Command::Oracle(a) => oracle::cmd_oracle(a),
        Command::Bench(a) => bench::cmd_bench(a),
        Command::Gen(a) => gen::cmd_gen(a).map(|_| EXIT_OK),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
