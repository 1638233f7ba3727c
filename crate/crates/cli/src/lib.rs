//! The `hms` command line: dataset generation, training, evaluation and
//! single-episode inspection.
//!
//! Progress goes to standard error; every artifact goes to files, together
//! with a `manifest.json` holding the effective parameters.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hms_core::model::ModelVariant;

pub use commands::{ExitCode, Failure};

pub const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nscene graph format: hms-scene-graph v1",
    "\ndataset format: hms-dataset v1",
    "\ngeneration config format: v1",
    "\ncheckpoint format: hms-checkpoint v1",
    "\ntrace format: jsonl v1"
);

#[derive(Debug, Parser)]
#[command(name = "hms", version, long_version = LONG_VERSION, about = "Hierarchical mechanical search over indoor scene graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of scene graphs.
    Gen(GenArgs),
    /// Train a scorer on a dataset.
    Train(TrainArgs),
    /// Classification accuracy and action-count matrix on a test dataset.
    Eval(EvalArgs),
    /// Run one search episode and write its trace.
    Search(SearchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Config file, or one of the built-in tables `default-train` and `default-test`.
    #[arg(long, default_value = "default-train")]
    pub config: String,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Text embedding file, or `builtin` for the bundled fixture.
    #[arg(long, default_value = "builtin")]
    pub embeddings: String,
    #[arg(long, default_value = "hms")]
    pub variant: ModelVariant,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 100)]
    pub batches: usize,
    #[arg(long, default_value_t = 10)]
    pub graphs_per_batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset scored after each epoch; defaults to held-out targets in the training graphs.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub validation_graphs: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Trained scorer, as `PATH` or `NAME=PATH`; repeatable. The policy
    /// name defaults to the checkpoint's variant.
    #[arg(long = "checkpoint")]
    pub checkpoints: Vec<String>,
    #[arg(long, default_value = "builtin")]
    pub embeddings: String,
    /// Comma list used for both axes, each policy on the axes it supports;
    /// `all` adds every baseline and every checkpoint.
    #[arg(long, default_value = "all")]
    pub policies: String,
    /// Rows of the matrix; overrides --policies and must all be container scorers.
    #[arg(long)]
    pub container_policies: Option<String>,
    /// Columns of the matrix; overrides --policies and must all be object scorers.
    #[arg(long)]
    pub object_policies: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    pub t0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub samples_per_graph: usize,
    /// Skip the classification accuracy table.
    #[arg(long)]
    pub no_accuracy: bool,
    /// Also write every episode trace under OUT/traces.
    #[arg(long)]
    pub traces: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// A `graphs.jsonl` file or a dataset directory.
    #[arg(long)]
    pub graph_file: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub graph_index: usize,
    /// Target object id; a held-out hidden object is drawn when omitted.
    #[arg(long)]
    pub target: Option<u32>,
    /// Generation tables; defaults to the dataset's config.json, then `default-test`.
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long)]
    pub checkpoint: Vec<String>,
    #[arg(long, default_value = "builtin")]
    pub embeddings: String,
    #[arg(long, default_value = "oracle")]
    pub container_policy: String,
    #[arg(long, default_value = "oracle")]
    pub object_policy: String,
    #[arg(long, default_value_t = 0.1)]
    pub t0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub trace_out: PathBuf,
}

/// Parses `argv` (program name first) and runs the command. Returns the
/// process exit code: 0 success, 1 usage, 2 data or config, 3 internal.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Usage as i32 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code as i32
        }
    }
}
