//! Per-representation hyperparameter defaults.
//!
//! Bump [`DEFAULTS_VERSION`] whenever a value in [`DEFAULTS`] changes; the
//! version is written into every config echo.

use serde::Serialize;

use crate::features::{effective_dim, FeatureSelection};
use crate::neuralnet::ModelConfig;

pub const DEFAULTS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepresentationDefaults {
    pub features: &'static str,
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
}

pub const DEFAULTS: [RepresentationDefaults; 4] = [
    RepresentationDefaults {
        features: "all21",
        hidden_units: 64,
        learning_rate: 0.0005,
        max_epochs: 75,
    },
    RepresentationDefaults {
        features: "six",
        hidden_units: 64,
        learning_rate: 0.01,
        max_epochs: 75,
    },
    RepresentationDefaults {
        features: "one",
        hidden_units: 32,
        learning_rate: 0.01,
        max_epochs: 75,
    },
    RepresentationDefaults {
        features: "mean",
        hidden_units: 32,
        learning_rate: 0.01,
        max_epochs: 75,
    },
];

pub fn defaults_for(selection: FeatureSelection) -> RepresentationDefaults {
    let key = match selection {
        FeatureSelection::All21 => "all21",
        FeatureSelection::Six => "six",
        FeatureSelection::One(_) => "one",
        FeatureSelection::MeanLandmark => "mean",
    };
    *DEFAULTS
        .iter()
        .find(|d| d.features == key)
        .expect("every selection has defaults")
}

/// Hyperparameter overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub learning_rate: Option<f64>,
    pub hidden_units: Option<usize>,
    pub max_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub dropout_rate: Option<f64>,
}

pub fn resolve_config(selection: FeatureSelection, overrides: &Overrides, seed: u64) -> ModelConfig {
    let defaults = defaults_for(selection);
    let base = ModelConfig::default();
    ModelConfig {
        input_dim: effective_dim(selection),
        hidden_units: overrides.hidden_units.unwrap_or(defaults.hidden_units),
        dropout_rate: overrides.dropout_rate.unwrap_or(base.dropout_rate),
        learning_rate: overrides.learning_rate.unwrap_or(defaults.learning_rate),
        max_epochs: overrides.max_epochs.unwrap_or(defaults.max_epochs),
        patience: overrides.patience.unwrap_or(base.patience),
        batch_size: overrides.batch_size.unwrap_or(base.batch_size),
        seed,
    }
}
