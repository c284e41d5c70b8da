//! `hscreen`: command-line pipeline that turns raw accelerometer and tweet
//! uploads into a depression screening report.
//!
//! Each subcommand runs one stage, reads the previous stage's files and
//! writes its own under the data directory, so stages can be rerun
//! individually. The data directory comes from `--data-dir`, then the
//! `HS_DATA_DIR` environment variable, then the config file, then `./data`.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod config;
mod paths;
mod stages;
mod tables;

use config::PipelineConfig;

#[derive(Parser)]
#[command(name = "hscreen", version, about = "Hybrid depression screening pipeline")]
struct Cli {
    /// Key=value config file; flags override its settings.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Root directory for stage inputs and outputs.
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,

    /// Master seed; every stage derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a cohort and route its uploads into the intake store.
    Generate {
        /// Number of participants (at least 3).
        #[arg(long)]
        n: Option<usize>,
        /// Number of study weeks per participant.
        #[arg(long)]
        weeks: Option<u32>,
    },
    /// Run the intake HTTP service over the store.
    Serve {
        /// Listen address.
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Filter stored accelerometer uploads and split off gravity.
    Preprocess,
    /// Train the activity recognition network on a synthetic window corpus.
    TrainHar,
    /// Train the tweet sentiment classifier on stored tweets.
    TrainSentiment,
    /// Build weekly feature vectors from processed signals and tweets.
    Featurize,
    /// Pick the feature subset that minimizes held-out regression error.
    SelectFeatures,
    /// Fit the sparse GDS regression and score it participant-wise.
    FitGds,
    /// Classify severity with held-out folds per participant.
    Classify,
    /// Score classification and regression outputs.
    Evaluate,
    /// Render the final plain-text report.
    Report,
}

fn run(cli: Cli) -> Result<String> {
    let cfg = PipelineConfig::resolve(
        cli.config.as_deref(),
        std::env::var_os("HS_DATA_DIR").map(PathBuf::from),
        cli.data_dir,
        cli.seed,
    )?;
    match cli.command {
        Command::Generate { n, weeks } => stages::generate::run(&cfg, n, weeks),
        Command::Serve { addr } => stages::serve::run(&cfg, &addr),
        Command::Preprocess => stages::preprocess::run(&cfg),
        Command::TrainHar => stages::train_har::run(&cfg),
        Command::TrainSentiment => stages::train_sentiment::run(&cfg),
        Command::Featurize => stages::featurize::run(&cfg),
        Command::SelectFeatures => stages::select_features::run(&cfg),
        Command::FitGds => stages::fit_gds::run(&cfg),
        Command::Classify => stages::classify::run(&cfg),
        Command::Evaluate => stages::evaluate::run(&cfg),
        Command::Report => stages::report::run(&cfg),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(line) => println!("{line}"),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
