//! Single-layer LSTM binary classifier trained from scratch.
//!
//! `input (T x D) -> LSTM(H) -> h_T -> dropout -> dense(1) -> sigmoid`

mod adam;
mod io;
mod lstm;
mod model;
mod params;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamState};
pub use io::{decode_model, encode_model, load_model, save_model, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use lstm::{lstm_forward, lstm_forward_batch, LstmCache};
pub use model::{
    bce_loss, predicted_label, FeatureSpec, ForwardCache, Model, DECISION_THRESHOLD, PROB_EPS,
};
pub use params::{
    dense_param_count, lstm_param_count, param_count, ModelParameters, GATE_ORDER, PARAM_ORDER,
};
pub use train::{
    evaluate, train, AugmentMode, AugmentOptions, EarlyStopping, EpochRecord, StopDecision,
    TrainOptions, TrainingHistory,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Defaults to 8; with a few hundred clips, 32 leaves too few updates
    /// per epoch to get past the initial plateau inside the patience window.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 126,
            hidden_units: 64,
            dropout_rate: 0.3,
            learning_rate: 0.0005,
            max_epochs: 75,
            patience: 10,
            batch_size: 8,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_units == 0 {
            return Err(Error::InvalidArgument(format!(
                "input_dim and hidden_units must be positive (D={}, H={})",
                self.input_dim, self.hidden_units
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "max_epochs and batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }
}
