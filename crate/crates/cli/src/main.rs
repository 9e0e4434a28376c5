use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod run;

/// Part-of-speech tagger for code-mixed social media text.
#[derive(Debug, Parser)]
#[command(name = "cmpos", version, about)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Only print warnings and errors on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a tagger bundle.
    Train(TrainArgs),
    /// Tag a corpus with a trained bundle.
    Tag(TagArgs),
    /// Score predicted tags against gold tags.
    Eval(EvalArgs),
    /// k-fold cross-validation on the training files.
    Cv(CvArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Tagset {
    Fine,
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Regime {
    /// Pool every training file.
    Run1,
    /// Only sentences from `--platform`.
    Run2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    Lbfgs,
    Asgd,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long, value_enum, default_value = "fine")]
    tagset: Tagset,

    #[arg(long, value_enum, default_value = "run1")]
    regime: Regime,

    /// Platform kept by run2: facebook, twitter or whatsapp.
    #[arg(long)]
    platform: Option<String>,

    /// Training file, optionally annotated as `path:platform`. Repeatable.
    #[arg(long = "in", value_name = "PATH[:PLATFORM]", required = true)]
    inputs: Vec<String>,

    /// Column roles, e.g. `surface,lang,tag`. Guessed from the first line when absent.
    #[arg(long)]
    columns: Option<String>,

    /// Feature template file (default: every feature family).
    #[arg(long, env = "CMPOS_TEMPLATE")]
    template: Option<PathBuf>,

    /// Emoticon dictionary replacing the built-in one.
    #[arg(long, env = "CMPOS_EMOTICONS")]
    emoticons: Option<PathBuf>,

    /// Number-word dictionary replacing the built-in one.
    #[arg(long, env = "CMPOS_NUMBER_WORDS")]
    number_words: Option<PathBuf>,

    /// Standard deviation of the Gaussian prior.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,

    #[arg(long, default_value_t = 200)]
    max_iter: usize,

    /// Relative objective change that ends training.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,

    #[arg(long, value_enum, default_value = "lbfgs")]
    optimizer: OptimizerArg,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Seed of the stochastic optimizer.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Bundle directory to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TagArgs {
    #[arg(long)]
    bundle: PathBuf,

    #[arg(long = "in")]
    input: PathBuf,

    /// Column roles of the input; tag columns are read and ignored.
    #[arg(long)]
    columns: Option<String>,

    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Append the posterior probability of each tag as an extra column.
    #[arg(long)]
    marginals: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,

    #[arg(long)]
    pred: PathBuf,

    #[arg(long, value_enum, default_value = "fine")]
    tagset: Tagset,

    /// Column roles shared by both files.
    #[arg(long)]
    columns: Option<String>,

    /// Also write the report as key=value lines.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,

    #[arg(long, default_value_t = 5)]
    folds: usize,

    /// Seeds the fold shuffle and the optimizer.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Also write per-fold reports as key=value lines.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(run::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(run::Failure::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
