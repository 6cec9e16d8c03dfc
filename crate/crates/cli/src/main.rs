//! `reid`: synthetic data, motion profiles, cycles, features, training and
//! evaluation from the command line.

mod commands;
mod config;
mod error;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, Settings};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "reid", version, about = "Video person re-identification from walking-cycle frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic two-camera dataset plus ground truth.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        spec: SynthArgs,
    },
    /// Motion profile of one sequence as `frame_index,value` CSV.
    Fep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sequence as `<camera>/<person>`.
        #[arg(long)]
        seq: String,
    },
    /// Walking cycles of one or every sequence.
    Cycles {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seq: Option<String>,
    },
    /// Per-frame handcrafted features of a dataset as FVEC.
    Features {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Pool per-frame FVEC features into per-cycle descriptors.
    Pool {
        #[command(flatten)]
        common: CommonArgs,
        /// Cycle list written by `cycles`; detected from `--data` when absent.
        #[arg(long)]
        cycles: Option<PathBuf>,
    },
    /// Fit PCA and the metric on every cross-camera identity.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the repeated-split evaluation and write the report bundle.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate once per value of one configuration axis.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// frames, pooling, pca-dim, measure, strategy or metric.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Frames per group (K).
    #[arg(long)]
    frames: Option<String>,
    #[arg(long, value_parser = ["representative", "random-whole", "equal-segments", "all", "random-halves"])]
    strategy: Option<String>,
    #[arg(long, value_parser = ["max", "avg", "first"])]
    pooling: Option<String>,
    #[arg(long = "pca-dim")]
    pca_dim: Option<String>,
    #[arg(long, value_parser = ["euclidean", "kissme"])]
    metric: Option<String>,
    #[arg(long, value_parser = ["min", "avg"])]
    measure: Option<String>,
    #[arg(long = "features-file")]
    features_file: Option<String>,
    #[arg(long, value_parser = ["dft", "refined"])]
    regulation: Option<String>,
    /// Dominant frequencies kept when regulating the motion profile.
    #[arg(long)]
    keep: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    identities: usize,
    /// Frames per sequence.
    #[arg(long, default_value_t = 64)]
    length: usize,
    /// Gait period in frames.
    #[arg(long, default_value_t = 16)]
    period: usize,
    /// Pixel noise relative to the leg texture contrast.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Per-frame occluder probability.
    #[arg(long, default_value_t = 0.3)]
    occlusion: f64,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
}

impl CommonArgs {
    fn resolve(&self) -> Result<Settings, CliError> {
        let mut values: BTreeMap<String, String> = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags = [
            ("data", &self.data),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("frames", &self.frames),
            ("strategy", &self.strategy),
            ("pooling", &self.pooling),
            ("pca-dim", &self.pca_dim),
            ("metric", &self.metric),
            ("measure", &self.measure),
            ("features-file", &self.features_file),
            ("regulation", &self.regulation),
            ("keep", &self.keep),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                values.insert(key.to_string(), v.clone());
            }
        }
        Settings::from_values(&values)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { common, spec } => commands::synth(&common.resolve()?, &spec),
        Command::Fep { common, seq } => commands::fep(&common.resolve()?, &seq),
        Command::Cycles { common, seq } => commands::cycles(&common.resolve()?, seq.as_deref()),
        Command::Features { common } => commands::features(&common.resolve()?),
        Command::Pool { common, cycles } => commands::pool(&common.resolve()?, cycles.as_deref()),
        Command::Train { common } => commands::train(&common.resolve()?),
        Command::Eval { common } => commands::eval(&common.resolve()?),
        Command::Sweep { common, axis, values } => commands::sweep(&common.resolve()?, &axis, &values),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
