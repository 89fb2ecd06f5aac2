//! `twolevel`: synthesize two-level decision set explanations under feature
//! policies and audit black box / explanation pairs.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "twolevel", version, about)]
struct Cli {
    /// Seed for data generation and splits; recorded in every run report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output file (or directory for `experiment`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON config: objective weights and bounds for train, explain and
    /// measures; the experiment description for `experiment`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset with its frozen schema.
    Synth(SynthArgs),
    /// Compute quantile cut points and write the frozen schema config.
    Discretize(DataArgs),
    /// Mine candidate conjunction pools.
    Mine(MineArgs),
    /// Train an interpretable black box on the ground-truth labels.
    Train(TrainArgs),
    /// Explain a black box under a feature policy.
    Explain(ExplainArgs),
    /// Audit a (black box, explanation) pair.
    Audit(AuditArgs),
    /// Raw measures and objective terms of a model.
    Measures(MeasuresArgs),
    /// Run the full train / explain / audit pipeline.
    Experiment,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GeneratorArg {
    Theorem1,
    CorrelatedBail,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum)]
    generator: GeneratorArg,
    #[arg(long, default_value_t = 10_000)]
    rows: usize,
    /// Proxy strength for correlated-bail.
    #[arg(long, default_value_t = 0.9)]
    correlation: f64,
    /// Label flip probability for correlated-bail.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Schema config declaring each column's kind and role.
    #[arg(long)]
    schema: PathBuf,
    /// Quantile bins for numeric columns without fixed cuts.
    #[arg(long)]
    n_bins: Option<usize>,
}

#[derive(Args, Debug)]
struct MiningArgs {
    #[arg(long, default_value_t = 0.05)]
    min_support: f64,
    #[arg(long, default_value_t = 3)]
    max_width: usize,
    /// Width cap for descriptor candidates.
    #[arg(long, default_value_t = 2)]
    outer_max_width: usize,
    /// Keep at most this many descriptors (highest support first).
    #[arg(long)]
    max_nd: Option<usize>,
    /// Keep at most this many antecedents (highest support first).
    #[arg(long)]
    max_dl: Option<usize>,
    /// Use these pools instead of mining.
    #[arg(long)]
    pools: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MineArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    mining: MiningArgs,
    /// Drop conjunctions on this policy's prohibited features.
    #[arg(long)]
    policy: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Maximum accepted local-search moves.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// Write the run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the model's raw measures and objective terms here.
    #[arg(long)]
    dump_measures: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    mining: MiningArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    /// Black-box model JSON.
    #[arg(long)]
    blackbox: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    mining: MiningArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long)]
    blackbox: PathBuf,
    #[arg(long)]
    explanation: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    eps_plus: f64,
}

#[derive(Args, Debug)]
struct MeasuresArgs {
    #[arg(long)]
    model: PathBuf,
    /// Measure disagreement against this model's predictions instead of the
    /// label column.
    #[arg(long)]
    blackbox: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    mining: MiningArgs,
    #[arg(long)]
    policy: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
