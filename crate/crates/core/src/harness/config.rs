//! Training configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::SgdConfig;

/// Hyperparameters of one training run. Defaults are the experiment recipe:
/// batch 64, up to 300 epochs, 10% validation split, early-stopping patience
/// 10, decision threshold 0.25, SGD at lr 0.01 with decay 1e-6 and momentum
/// 0.9.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub val_fraction: f64,
    pub patience: usize,
    pub threshold: f32,
    pub optimizer: SgdConfig,
    pub seed: u64,
    /// Worker threads for per-batch parallelism; 0 means all cores.
    /// Gradient reduction is order-fixed, so results do not depend on this.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            max_epochs: 300,
            val_fraction: 0.1,
            patience: 10,
            threshold: 0.25,
            optimizer: SgdConfig::default(),
            seed: 42,
            threads: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max epochs must be positive".into()));
        }
        if !(0.0 < self.val_fraction && self.val_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation fraction must be in (0, 1), got {}",
                self.val_fraction
            )));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if !(0.0 < self.threshold && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold must be in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}
