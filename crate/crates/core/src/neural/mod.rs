//! Framework-free neural core: a small autodiff tape, the GIN model, masked
//! losses and Adam.

mod adam;
mod batch;
mod loss;
mod model;
mod tape;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{adam_step, adam_update, AdamConfig, AdamState};
pub use batch::GraphBatch;
pub use loss::{masked_loss, MaskedTargets};
pub use model::{
    model_forward, predict, Dense, Forward, InputEncoder, InputSpec, Mlp, ModelConfig, ModelParams,
    Readout,
};
pub use tape::{Grads, Tape, Var};

/// Fixed-budget training settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn learning_rate(&self) -> f64 {
        self.adam.learning_rate
    }

    pub fn validate(&self) -> Result<()> {
        if self.adam.learning_rate.is_nan() || self.adam.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.adam.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
