//! `pcl`: experiment driver for patronizing-language classifiers.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use pcl_core::corpus::CorpusFormat;
use pcl_core::metrics::Task;

use commands::{ReportFormat, TrainOverrides};
use config::{LoadedConfig, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(
    name = "pcl",
    version,
    about = "Train, ensemble and score PCL classifiers"
)]
struct Cli {
    /// Root directory for relative `[output] dir` values.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV)]
    output_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    CanonicalTsv,
    OfficialDpm,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::CanonicalTsv => CorpusFormat::CanonicalTsv,
            FormatArg::OfficialDpm => CorpusFormat::OfficialDpm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Binary,
    Multilabel,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Binary => Task::Binary,
            TaskArg::Multilabel => Task::Multilabel,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportArg {
    Table,
    Kv,
}

impl From<ReportArg> for ReportFormat {
    fn from(r: ReportArg) -> Self {
        match r {
            ReportArg::Table => ReportFormat::Table,
            ReportArg::Kv => ReportFormat::Kv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert a corpus file into the canonical TSV layout.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "official-dpm")]
        format: FormatArg,
        /// Category annotations (`id c1..c7`) to attach.
        #[arg(long)]
        categories: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the train/dev split described by a config.
    Split {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train the `[model]` of a config (or its `[grid]`).
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a corpus with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "canonical-tsv")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the model's confidence cutoff.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Train two ANN and two LSTM runs and majority-vote on the dev split.
    Ensemble {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score a prediction file against gold labels.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value = "binary")]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "table")]
        report: ReportArg,
        /// Also write the key-value report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Precision/recall/F1 of a score file across confidence thresholds.
    Sweep {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// Comma-separated ascending thresholds in (0, 1).
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "table")]
        report: ReportArg,
    },
    /// Write a seeded synthetic corpus, embeddings and example config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        dim: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    let root = cli.output_root;
    match cli.command {
        Command::Ingest {
            input,
            format,
            categories,
            out,
        } => commands::cmd_ingest(&input, format.into(), categories.as_deref(), &out),
        Command::Split { config } => commands::cmd_split(&LoadedConfig::load(&config, root)?),
        Command::Train {
            config,
            epochs,
            batch_size,
            seed,
        } => commands::cmd_train(
            &mut LoadedConfig::load(&config, root)?,
            &TrainOverrides {
                epochs,
                batch_size,
                seed,
            },
        ),
        Command::Predict {
            model,
            corpus,
            format,
            out,
            threshold,
        } => commands::cmd_predict(&model, &corpus, format.into(), &out, threshold),
        Command::Ensemble { config } => commands::cmd_ensemble(&LoadedConfig::load(&config, root)?),
        Command::Evaluate {
            gold,
            pred,
            task,
            report,
            out,
        } => commands::cmd_evaluate(&gold, &pred, task.into(), report.into(), out.as_deref()),
        Command::Sweep {
            gold,
            scores,
            grid,
            report,
        } => {
            let grid = grid.unwrap_or_else(|| commands::DEFAULT_SWEEP_GRID.to_vec());
            commands::cmd_sweep(&gold, &scores, &grid, report.into())
        }
        Command::Synth { out, n, seed, dim } => commands::cmd_synth(&out, n, seed, dim),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
