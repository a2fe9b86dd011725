//! `star`: simulate cohorts, build features and evaluate at-risk prediction.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use star_core::pipeline::PipelineConfig;
use star_core::Error;

#[derive(Parser, Debug)]
#[command(name = "star", version, about = "Early warning for students at risk")]
struct Cli {
    /// TOML config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override `paths.output_dir`.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Override the global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism). Outputs do not
    /// depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic cohort (events and labels CSVs).
    Simulate(SimulateArgs),
    /// Parse the input CSVs and report what was read.
    IngestCheck,
    /// Write feature tables, one per block plus a combined table.
    Features(CutoffArgs),
    /// Write the library co-occurrence graph.
    Graph(CutoffArgs),
    /// Train and write node embeddings.
    Embed(CutoffArgs),
    /// Fit one ablation on all labeled students and save the model.
    Train(TrainArgs),
    /// Cross-validate the configured ablations.
    Evaluate(EvaluateArgs),
    /// Re-evaluate EPARS over values of one hyperparameter.
    Sweep(SweepArgs),
    /// Summarize an existing fold-level report.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    n_students: Option<usize>,
    #[arg(long)]
    star_fraction: Option<f64>,
    #[arg(long)]
    star_clique_bias: Option<f64>,
}

#[derive(Args, Debug)]
struct CutoffArgs {
    /// Use events before the end of this week (default: whole term).
    #[arg(long)]
    cutoff_week: Option<u32>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    cutoff: CutoffArgs,
    #[arg(long, default_value = "EPARS")]
    ablation: String,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Evaluate at every cutoff week instead of the whole term.
    #[arg(long)]
    weekly: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// One of S, delta, sigma.
    #[arg(long)]
    param: String,
    /// Comma-separated integer values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<u64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Fold-level CSV (default: `<output_dir>/folds.csv`).
    #[arg(long)]
    input: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::Unsupported(_) => 4,
        Error::Range(_) | Error::Validation(_) | Error::UndefinedMetric(_) | Error::EmptyDistribution(_) => 2,
    }
}

fn load_config(cli: &Cli) -> star_core::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(dir) = &cli.output_dir {
        cfg.paths.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> star_core::Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    }
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Simulate(a) => {
            if let Some(n) = a.n_students {
                cfg.synth.n_students = n;
            }
            if let Some(f) = a.star_fraction {
                cfg.synth.star_fraction = f;
            }
            if let Some(b) = a.star_clique_bias {
                cfg.synth.star_clique_bias = b;
            }
            cfg.validate()?;
            commands::simulate(&cfg)
        }
        Command::IngestCheck => commands::ingest_check(&cfg),
        Command::Features(a) => commands::features(&cfg, a.cutoff_week),
        Command::Graph(a) => commands::graph(&cfg, a.cutoff_week),
        Command::Embed(a) => commands::embed(&cfg, a.cutoff_week),
        Command::Train(a) => commands::train(&cfg, a.cutoff.cutoff_week, &a.ablation),
        Command::Evaluate(a) => commands::evaluate(&cfg, a.weekly),
        Command::Sweep(a) => commands::sweep(&cfg, &a.param, &a.values),
        Command::Report(a) => commands::report(&cfg, a.input),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(4)
        }
    }
}
