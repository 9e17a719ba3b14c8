//! Command-line definitions and config-file resolution.
//!
//! Every run is driven by one resolved configuration: values come from the
//! optional JSON config file, and explicit flags win over it. Unknown keys
//! in the config file are rejected. Each command writes its resolved
//! configuration next to its outputs so a run can be reproduced exactly.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use facerx_core::data::AugmentParams;
use facerx_core::harness::TrainConfig;
use facerx_core::models::Architecture;
use facerx_core::optim::SgdConfig;
use facerx_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "facerx", version, about = "Herbal prescription generation from face images")]
pub struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic planted-signal dataset.
    GenSynthetic(GenSyntheticArgs),
    /// Train one model on a dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset at one threshold.
    Evaluate(EvaluateArgs),
    /// Evaluate a checkpoint across a threshold sweep.
    Sweep(SweepArgs),
    /// 5-fold cross-validation of one architecture.
    Crossval(CrossvalArgs),
    /// Decode a prescription for a single face image.
    Predict(PredictArgs),
    /// Expand a dataset on disk with augmented copies.
    Augment(AugmentArgs),
}

#[derive(Args, Debug)]
pub struct GenSyntheticArgs {
    /// Number of samples.
    #[arg(long)]
    pub count: Option<usize>,
    /// Dictionary size.
    #[arg(long)]
    pub herbs: Option<usize>,
    /// Face image size (multiple of 8).
    #[arg(long)]
    pub size: Option<usize>,
    /// JSON signal-spec file; defaults to the built-in layout.
    #[arg(long)]
    pub signal_spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset root directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Architecture: conventional | three-grained.
    #[arg(long)]
    pub arch: Option<String>,
    /// Expansion factor applied to the training split (1 = off).
    #[arg(long)]
    pub augment_factor: Option<f64>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Args, Debug)]
pub struct TrainFlags {
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f32>,
    #[arg(long)]
    pub learning_rate: Option<f32>,
    #[arg(long)]
    pub decay: Option<f32>,
    #[arg(long)]
    pub momentum: Option<f32>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub threshold: Option<f32>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Sweep range as start:end:step, e.g. 0.05:0.6:0.05.
    #[arg(long, default_value = "0.05:0.6:0.05")]
    pub thresholds: String,
}

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub augment_factor: Option<f64>,
    /// Number of folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Per-fold test-set size (defaults to min(len/folds, 500)).
    #[arg(long)]
    pub test_size: Option<usize>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Face image (png).
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dictionary file for herb names; defaults to indices when absent.
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f32>,
    /// Also write the seven segmented crops next to the output.
    #[arg(long)]
    pub show_crops: bool,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Expansion factor (>= 1).
    #[arg(long)]
    pub factor: Option<f64>,
}

/// Values a JSON config file may provide; flags override them.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub architecture: Option<String>,
    pub count: Option<usize>,
    pub herbs: Option<usize>,
    pub size: Option<usize>,
    pub augment_factor: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub val_fraction: Option<f64>,
    pub patience: Option<usize>,
    pub threshold: Option<f32>,
    pub learning_rate: Option<f32>,
    pub decay: Option<f32>,
    pub momentum: Option<f32>,
    pub folds: Option<usize>,
    pub test_size: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("bad config {}: {e}", path.display())))
            }
        }
    }
}

/// Fully resolved run-wide settings.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
}

pub fn resolve_common(cli_seed: Option<u64>, cli_threads: Option<usize>, cli_out: Option<PathBuf>, file: &FileConfig) -> Resolved {
    Resolved {
        seed: cli_seed.or(file.seed).unwrap_or(42),
        threads: cli_threads.or(file.threads).unwrap_or(0),
        out: cli_out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
    }
}

/// Training hyperparameters resolved from flags, config file, and defaults.
pub fn resolve_train(flags: &TrainFlags, file: &FileConfig, seed: u64, threads: usize) -> TrainConfig {
    let defaults = TrainConfig::default();
    TrainConfig {
        batch_size: flags.batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
        max_epochs: flags.max_epochs.or(file.max_epochs).unwrap_or(defaults.max_epochs),
        val_fraction: flags.val_fraction.or(file.val_fraction).unwrap_or(defaults.val_fraction),
        patience: flags.patience.or(file.patience).unwrap_or(defaults.patience),
        threshold: flags.threshold.or(file.threshold).unwrap_or(defaults.threshold),
        optimizer: SgdConfig {
            learning_rate: flags
                .learning_rate
                .or(file.learning_rate)
                .unwrap_or(defaults.optimizer.learning_rate),
            decay: flags.decay.or(file.decay).unwrap_or(defaults.optimizer.decay),
            momentum: flags.momentum.or(file.momentum).unwrap_or(defaults.optimizer.momentum),
        },
        seed,
        threads,
    }
}

pub fn resolve_arch(flag: Option<&str>, file: &FileConfig) -> Result<Architecture> {
    match flag.map(str::to_string).or_else(|| file.architecture.clone()) {
        Some(name) => Architecture::parse(&name),
        None => Err(Error::Config(
            "no architecture given; pass --arch conventional or --arch three-grained".into(),
        )),
    }
}

/// Augmentation defaults follow the training recipe's table.
pub fn augment_params() -> AugmentParams {
    AugmentParams::default()
}

/// Parse "start:end:step" into an ascending threshold list.
pub fn parse_threshold_range(spec: &str) -> Result<Vec<f32>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "threshold range must be start:end:step, got {spec:?}"
        )));
    }
    let parse = |s: &str| -> Result<f32> {
        s.parse::<f32>()
            .map_err(|_| Error::Config(format!("bad number {s:?} in threshold range")))
    };
    let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step <= 0.0 || start <= 0.0 || end >= 1.0 || start > end {
        return Err(Error::Config(format!(
            "threshold range {spec:?} must satisfy 0 < start <= end < 1 with positive step"
        )));
    }
    let mut ts = Vec::new();
    let mut t = start;
    while t <= end + 1e-6 {
        ts.push(t);
        t += step;
    }
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_range_parses() {
        let ts = parse_threshold_range("0.1:0.3:0.1").unwrap();
        assert_eq!(ts.len(), 3);
        assert!((ts[0] - 0.1).abs() < 1e-6);
        assert!((ts[2] - 0.3).abs() < 1e-6);
        assert!(parse_threshold_range("0.5:0.1:0.1").is_err());
        assert!(parse_threshold_range("nope").is_err());
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let err = serde_json::from_str::<FileConfig>(r#"{"sneaky": 1}"#);
        assert!(err.is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file = FileConfig { batch_size: Some(16), max_epochs: Some(7), ..Default::default() };
        let flags = TrainFlags {
            batch_size: Some(8),
            max_epochs: None,
            val_fraction: None,
            patience: None,
            threshold: None,
            learning_rate: None,
            decay: None,
            momentum: None,
        };
        let cfg = resolve_train(&flags, &file, 1, 1);
        assert_eq!(cfg.batch_size, 8);
        assert_eq!(cfg.max_epochs, 7);
        assert_eq!(cfg.patience, 10);
    }
}
