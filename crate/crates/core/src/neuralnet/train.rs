//! Mini-batch training with validation-accuracy early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::model::{bce_loss, predicted_label, FeatureSpec, Model};
use super::ModelConfig;
use crate::augmentation::{apply_augmentation, sample_augmentation_with, DEFAULT_Z_SLACK};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::landmark::Clip;
use crate::seed::derive_path;

const EVAL_CHUNK: usize = 64;

/// Whether augmented copies join the originals each epoch or replace them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMode {
    Supplement,
    Replace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentOptions {
    pub mode: AugmentMode,
    pub z_slack: f64,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            mode: AugmentMode::Supplement,
            z_slack: DEFAULT_Z_SLACK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub features: FeatureSpec,
    pub augment: Option<AugmentOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Tracks the best monitored value; ties keep the earlier epoch.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.map(|(epoch, _)| epoch)
    }

    pub fn observe(&mut self, epoch: usize, value: f64) -> StopDecision {
        match self.best {
            Some((_, best)) if value <= best => {}
            _ => {
                self.best = Some((epoch, value));
                return StopDecision::Improved;
            }
        }
        let (best_epoch, _) = self.best.expect("set above");
        if epoch - best_epoch >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

fn targets_of(clips: &[&Clip]) -> Result<Vec<u8>> {
    clips
        .iter()
        .map(|clip| {
            clip.label.map(|l| l.target()).ok_or_else(|| {
                Error::InvalidArgument(format!("clip {} has no label", clip.clip_id))
            })
        })
        .collect()
}

/// Accuracy and mean loss of `model` in evaluation mode.
pub fn evaluate(model: &Model, xs: &[&FeatureMatrix], targets: &[u8]) -> Result<(f64, f64)> {
    let probs = model.predict_matrices(xs, EVAL_CHUNK)?;
    let n = probs.len().max(1) as f64;
    let correct = probs
        .iter()
        .zip(targets)
        .filter(|(&p, &y)| predicted_label(p) == y)
        .count();
    let loss = probs.iter().zip(targets).map(|(&p, &y)| bce_loss(p, y)).sum::<f64>() / n;
    Ok((correct as f64 / n, loss))
}

/// Trains a fresh model and returns the weights of the best validation
/// epoch. Training clips are put in clip-id order before the seeded
/// shuffle, so the result does not depend on input order.
pub fn train(
    config: &ModelConfig,
    options: &TrainOptions,
    train_set: &[Clip],
    val_set: &[Clip],
) -> Result<(Model, TrainingHistory)> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation sets must be non-empty".into(),
        ));
    }
    if options.features.dim() != config.input_dim {
        return Err(Error::Dimension(format!(
            "features `{}` produce {} columns but config.input_dim is {}",
            options.features.selection,
            options.features.dim(),
            config.input_dim
        )));
    }

    let mut ordered: Vec<&Clip> = train_set.iter().collect();
    ordered.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    let train_targets = targets_of(&ordered)?;
    let base_features = ordered
        .iter()
        .map(|clip| options.features.build(clip))
        .collect::<Result<Vec<_>>>()?;

    let val_clips: Vec<&Clip> = val_set.iter().collect();
    let val_targets = targets_of(&val_clips)?;
    let val_features = val_clips
        .iter()
        .map(|clip| options.features.build(clip))
        .collect::<Result<Vec<_>>>()?;
    let val_refs: Vec<&FeatureMatrix> = val_features.iter().collect();

    let mut model = Model::init(config.clone())?.with_features(options.features);
    let mut adam = AdamState::for_params(&model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut stopper = EarlyStopping::new(config.patience);
    let mut best_params = model.params.clone();
    let mut history = TrainingHistory {
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };

    for epoch in 1..=config.max_epochs {
        let augmented = match options.augment {
            None => Vec::new(),
            Some(aug) => ordered
                .iter()
                .enumerate()
                .map(|(i, clip)| {
                    let seed = derive_path(config.seed, &[epoch as u64, i as u64]);
                    let params = sample_augmentation_with(clip, seed, aug.z_slack);
                    options.features.build(&apply_augmentation(clip, params)?)
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let mut examples: Vec<(&FeatureMatrix, u8)> = match options.augment {
            Some(AugmentOptions {
                mode: AugmentMode::Replace,
                ..
            }) => augmented.iter().zip(train_targets.iter().copied()).collect(),
            _ => base_features
                .iter()
                .chain(augmented.iter())
                .zip(train_targets.iter().chain(train_targets.iter()).copied())
                .collect(),
        };
        examples.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for batch in examples.chunks(config.batch_size) {
            let (xs, ys): (Vec<&FeatureMatrix>, Vec<u8>) = batch.iter().copied().unzip();
            let mask = (config.dropout_rate > 0.0).then(|| model.dropout_mask(xs.len(), &mut rng));
            let cache = model.forward_batch(&xs, mask)?;
            loss_sum += cache
                .probabilities
                .iter()
                .zip(&ys)
                .map(|(&p, &y)| bce_loss(p, y))
                .sum::<f64>();
            let mut grads = model.backward(&cache, &ys)?;
            grads.scale(1.0 / xs.len() as f64);
            adam_step(&mut model.params, &grads, &mut adam, config.learning_rate);
        }

        let (val_accuracy, val_loss) = evaluate(&model, &val_refs, &val_targets)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / examples.len() as f64,
            val_loss,
            val_accuracy,
        });
        match stopper.observe(epoch, val_accuracy) {
            StopDecision::Improved => {
                best_params = model.params.clone();
                history.best_epoch = epoch;
            }
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.stopped_early = true;
                break;
            }
        }
    }

    model.params = best_params;
    Ok((model, history))
}
