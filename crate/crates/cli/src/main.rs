mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use smf_core::SmfError;

#[derive(Parser, Debug)]
#[command(name = "smf", version, about = "Landmark-anchored separable network embedding")]
#[command(args_override_self = true)]
struct Cli {
    /// Log progress (repeat for debug output); RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Embed a graph and write vectors plus a run manifest.
    Embed(EmbedArgs),
    /// Score SMF, Nyström and the SVD oracle over a sweep of k.
    EvalReconstruct(EvalArgs),
    /// Micro-F1 of logistic regression over a sweep of train fractions.
    Classify(ClassifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PartitionArg {
    Louvain,
    Random,
    #[value(alias = "interested-only")]
    Io,
    External,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Dd,
    Dp,
    Uf,
    Gds,
    External,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    RAll,
    RNz,
    Both,
}

/// Graph, solver, partition and landmark settings shared by `embed` and
/// `eval-reconstruct`. Every field may also come from `--config`.
#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// `key = value` file; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge list, one "u v" pair per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub directed: Option<bool>,
    #[arg(long, value_enum)]
    pub order: Option<OrderArg>,
    /// Number of landmarks.
    #[arg(long)]
    pub k: Option<usize>,
    /// Embedding dimension.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Relative loss decrease that ends a section early; 0 runs all iterations.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub partition: Option<PartitionArg>,
    /// Set count for the random partition.
    #[arg(long)]
    pub sets: Option<usize>,
    /// Largest set size (default 10·k).
    #[arg(long)]
    pub max_set_size: Option<usize>,
    /// "label set_index" lines, for `--partition external`.
    #[arg(long)]
    pub partition_file: Option<PathBuf>,
    /// One node label per line, for `--partition io`.
    #[arg(long)]
    pub requested: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub landmarks: Option<StrategyArg>,
    /// Read landmarks (one label per line) instead of selecting them.
    #[arg(long)]
    pub landmarks_in: Option<PathBuf>,
    /// Write the selected landmarks.
    #[arg(long)]
    pub landmarks_out: Option<PathBuf>,
    /// Concurrent sections; 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip failing sections instead of aborting.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub best_effort: Option<bool>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Append the context vectors C after W on each row.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    with_context: Option<bool>,
    /// Defaults to `<output>.manifest`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated landmark counts.
    #[arg(long, value_delimiter = ',')]
    k_sweep: Vec<usize>,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Dataset column of the CSV (defaults to the input file stem).
    #[arg(long)]
    dataset: Option<String>,
    /// CSV path; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// word2vec text or binary embeddings.
    #[arg(long)]
    embeddings: PathBuf,
    /// "node_label class_id" lines.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.9")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, default_value = "smf")]
    method: String,
    /// Value of the k column, if known.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(SmfError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<SmfError> for CliError {
    fn from(e: SmfError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let argv = match config::inject_config(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("smf: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Embed(a) => commands::embed(a.run, a.output, a.format, a.with_context, a.manifest),
        Command::EvalReconstruct(a) => commands::eval_reconstruct(a.run, a.k_sweep, a.metric, a.dataset, a.output),
        Command::Classify(a) => commands::classify(commands::ClassifyRequest {
            embeddings: a.embeddings,
            labels: a.labels,
            fractions: a.fractions,
            runs: a.runs,
            seed: a.seed,
            dataset: a.dataset,
            method: a.method,
            k: a.k,
            output: a.output,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("smf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
