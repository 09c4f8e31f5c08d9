//! Command-line front end for `hieralign`.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data, 3 internal error.

pub mod benchmark;
pub mod commands;
pub mod files;
pub mod manifest;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "HIERALIGN_THREADS";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_DATA,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            error: error.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.error)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "hieralign", version, about = "Align performances against sheet music lines, with repeats and jumps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Align a performance against a sheet and write alignment and timeline files.
    Align(AlignArgs),
    /// Splice a fixture's performance according to a jump schema.
    Synth(SynthArgs),
    /// Write a directory of random in-order piece fixtures.
    Corpus(CorpusArgs),
    /// Score a predicted timeline against ground truth.
    Evaluate(EvaluateArgs),
    /// Run every algorithm on every spliced query of a corpus.
    Benchmark(BenchmarkArgs),
    /// Draw error strips for one or more predictions.
    Visualize(VisualizeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum Algo {
    Subseq,
    Jump,
    Hier,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Subseq => "subseq",
            Algo::Jump => "jump",
            Algo::Hier => "hier",
        }
    }
}

/// Hyperparameters shared by `align` and `benchmark`.
#[derive(Args, Clone, Debug)]
pub struct AlgoParams {
    /// Weight of stay and skip-one transitions.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Scale of the jump penalty relative to the mean line score.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Additive jump penalty for the Jump DTW baseline.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub jump_penalty: f64,
    #[arg(long)]
    pub no_backward_jumps: bool,
    #[arg(long)]
    pub no_forward_jumps: bool,
}

#[derive(Args, Debug)]
pub struct AlignArgs {
    #[arg(long)]
    pub sheet: PathBuf,
    #[arg(long)]
    pub perf: PathBuf,
    #[arg(long)]
    pub timemap: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Hier)]
    pub algo: Algo,
    #[command(flatten)]
    pub params: AlgoParams,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Fixture directory of an in-order performance.
    #[arg(long)]
    pub piece_dir: PathBuf,
    #[arg(long)]
    pub schema: hieralign::benchgen::SchemaKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    #[arg(long, default_value_t = 20)]
    pub pieces: usize,
    #[arg(long, default_value_t = 8)]
    pub lines: usize,
    #[arg(long, default_value_t = 8)]
    pub cols_per_line: usize,
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Collar in seconds; repeat for several.
    #[arg(long = "collar", default_values_t = [0.0, 0.5, 1.0], allow_negative_numbers = true)]
    pub collars: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub corpus_dir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Subseq, Algo::Jump, Algo::Hier])]
    pub algos: Vec<Algo>,
    #[arg(long, value_delimiter = ',', default_values_t = hieralign::benchgen::SchemaKind::ALL)]
    pub schemas: Vec<hieralign::benchgen::SchemaKind>,
    /// Samples per repeat schema. Schema `none` uses only the first seed.
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2, 3, 4])]
    pub seeds: Vec<u64>,
    #[arg(long = "collar", value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0], allow_negative_numbers = true)]
    pub collars: Vec<f64>,
    /// Fraction of performance columns replaced by random columns.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub corrupt: f64,
    #[command(flatten)]
    pub params: AlgoParams,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VisualizeArgs {
    /// Predictions as NAME=TIMELINE_PATH, drawn in the order given.
    #[arg(long, num_args = 1.., required = true)]
    pub preds: Vec<String>,
    #[arg(long)]
    pub gt: PathBuf,
    /// JSON array of jump times in seconds.
    #[arg(long)]
    pub jumps: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors are reported on stderr.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e);
            e.code
        }
    }
}

/// Runs a parsed command inside a thread pool sized by `HIERALIGN_THREADS`.
pub fn run(cli: Cli, argv: &[String]) -> CliResult<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => return Err(CliError::usage(anyhow::anyhow!("{} must be a positive integer, got {:?}", THREADS_ENV, v))),
        },
        Err(_) => None,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(CliError::internal)?;
    let ctx = manifest::Context::new(argv, pool.current_num_threads());
    pool.install(|| match cli.command {
        Command::Align(a) => commands::align(&a, &ctx),
        Command::Synth(a) => commands::synth(&a, &ctx),
        Command::Corpus(a) => commands::corpus(&a, &ctx),
        Command::Evaluate(a) => commands::evaluate(&a, &ctx),
        Command::Benchmark(a) => benchmark::run(&a, &ctx),
        Command::Visualize(a) => commands::visualize(&a, &ctx),
    })
}
