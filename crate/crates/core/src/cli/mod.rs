//! `handflap` command-line interface.

mod commands;
pub mod defaults;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::features::FeatureSelection;

pub use commands::{
    cmd_crossval, cmd_predict, cmd_prepare, cmd_synth, cmd_train, PrepareSummary, Prediction,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Parse { .. } | Error::Validation(_) | Error::Dimension(_) => EXIT_VALIDATION,
        Error::Io { .. } | Error::Csv { .. } => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "handflap", version, about = "Hand-flapping detection from hand landmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut positive and control clips out of whole-video landmark files.
    Prepare(PrepareArgs),
    /// Repeated stratified k-fold cross-validation with report files.
    Crossval(CrossvalArgs),
    /// Train one model on a manifest and write the model file.
    Train(TrainArgs),
    /// Score one clip with a trained model.
    Predict(PredictArgs),
    /// Generate a balanced synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Annotation CSV (`video_id,behavior,start_s,end_s`).
    #[arg(long)]
    pub annotations: PathBuf,
    /// Directory of `<video_id>.jsonl` landmark files.
    #[arg(long)]
    pub landmarks: PathBuf,
    /// File of video ids to leave out, one per line.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
}

impl HyperArgs {
    pub fn overrides(&self) -> defaults::Overrides {
        defaults::Overrides {
            learning_rate: self.lr,
            hidden_units: self.hidden,
            max_epochs: self.epochs,
            batch_size: self.batch,
            patience: self.patience,
            dropout_rate: self.dropout,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Landmark selection: all21, six, one, one:<index> or mean.
    #[arg(long, value_parser = parse_selection)]
    pub features: FeatureSelection,
    /// Shift-augment training clips every epoch.
    #[arg(long)]
    pub augment: bool,
    /// Train on augmented copies only instead of originals plus copies.
    #[arg(long, requires = "augment")]
    pub augment_replace: bool,
    /// Depth offset budget for augmentation.
    #[arg(long, default_value_t = crate::augmentation::DEFAULT_Z_SLACK)]
    pub z_slack: f64,
    /// Fill interior landmark gaps by linear interpolation.
    #[arg(long)]
    pub interpolate: bool,
    /// Master seed; falls back to $FLAP_SEED, then 0.
    #[arg(long, env = "FLAP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Fraction of the training data held out for early stopping.
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Concurrent fold jobs (0 = one per CPU).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub clip: PathBuf,
    /// Override the feature selection stored in the model file.
    #[arg(long, value_parser = parse_selection)]
    pub features: Option<FeatureSelection>,
    #[arg(long)]
    pub interpolate: Option<bool>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n_per_class: usize,
    #[arg(long, env = "FLAP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 90)]
    pub frames: usize,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_selection(s: &str) -> Result<FeatureSelection, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Prepare(args) => cmd_prepare(&args).map(|_| ()),
        Command::Crossval(args) => cmd_crossval(&args).map(|_| ()),
        Command::Train(args) => cmd_train(&args).map(|_| ()),
        Command::Predict(args) => cmd_predict(&args).map(|p| println!("{p}")),
        Command::Synth(args) => cmd_synth(&args).map(|_| ()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
