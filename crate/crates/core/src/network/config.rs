use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Number of resolution levels.
    pub depth: usize,
    pub blocks_per_level: usize,
    /// Channels at level 0; level i has `2^i · start_channels`.
    pub start_channels: usize,
    pub kernel_size: usize,
    pub use_wnet: bool,
    pub use_eca: bool,
    /// Whole-channel dropout probability during training.
    pub dropout: f64,
    pub leaky_slope: f64,
    /// Weight of the old value in the running normalization statistics.
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            depth: 5,
            blocks_per_level: 2,
            start_channels: 8,
            kernel_size: 3,
            use_wnet: false,
            use_eca: false,
            dropout: 0.25,
            leaky_slope: 0.01,
            bn_momentum: 0.9,
            bn_eps: 1e-5,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::Config(format!("network depth must be ≥ 2, got {}", self.depth)));
        }
        if self.blocks_per_level < 1 || self.start_channels < 1 {
            return Err(Error::Config("blocks_per_level and start_channels must be ≥ 1".into()));
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::Config(format!("kernel_size must be odd, got {}", self.kernel_size)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if !(0.0..1.0).contains(&self.bn_momentum) || self.bn_eps <= 0.0 {
            return Err(Error::Config("bn_momentum must be in [0, 1) and bn_eps positive".into()));
        }
        Ok(())
    }

    pub fn channels(&self, level: usize) -> usize {
        self.start_channels << level
    }

    /// Input lengths must be multiples of this.
    pub fn length_multiple(&self) -> usize {
        1 << (self.depth - 1)
    }
}

/// Which sources feed the training batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataMix {
    Real,
    #[default]
    Synthetic,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub steps_per_epoch: usize,
    pub epochs: usize,
    pub dice_weight: f64,
    pub boundary_weight: f64,
    pub f1_weight: f64,
    pub boundary_kernel: usize,
    /// Smoothing constant of all three losses.
    pub loss_eps: f64,
    pub data_mix: DataMix,
    /// Training window in samples.
    pub window: usize,
    pub augment: bool,
    /// Batches prepared ahead of the optimizer.
    pub prefetch: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 16,
            steps_per_epoch: 100,
            epochs: 10,
            dice_weight: 1.0,
            boundary_weight: 0.0,
            f1_weight: 0.0,
            boundary_kernel: 11,
            loss_eps: 1.0,
            data_mix: DataMix::Synthetic,
            window: 1024,
            augment: true,
            prefetch: 4,
            seed: 123_456,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.steps_per_epoch == 0 || self.window == 0 {
            return Err(Error::Config("learning_rate, batch_size, steps_per_epoch and window must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.adam_eps <= 0.0 {
            return Err(Error::Config("Adam decays must be in [0, 1) and eps positive".into()));
        }
        for (name, w) in [("dice", self.dice_weight), ("boundary", self.boundary_weight), ("f1", self.f1_weight)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("{name}_weight must be ≥ 0, got {w}")));
            }
        }
        if self.boundary_kernel < 3 || self.boundary_kernel % 2 == 0 {
            return Err(Error::Config(format!("boundary_kernel must be odd and ≥ 3, got {}", self.boundary_kernel)));
        }
        if self.loss_eps < 0.0 {
            return Err(Error::Config("loss_eps must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.steps_per_epoch * self.epochs
    }
}
