use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{lstm_backward, lstm_forward_batch, sigmoid, LstmCache};
use super::params::ModelParameters;
use super::ModelConfig;
use crate::error::{Error, Result};
use crate::features::{build_features, effective_dim, FeatureMatrix, FeatureSelection};
use crate::landmark::Clip;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` inside the loss.
pub const PROB_EPS: f64 = 1e-7;

pub const DECISION_THRESHOLD: f64 = 0.5;

pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// How a model's input matrices are built from clips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub selection: FeatureSelection,
    pub interpolate: bool,
}

impl FeatureSpec {
    pub fn new(selection: FeatureSelection, interpolate: bool) -> Self {
        FeatureSpec {
            selection,
            interpolate,
        }
    }

    pub fn dim(&self) -> usize {
        effective_dim(self.selection)
    }

    pub fn build(&self, clip: &Clip) -> Result<FeatureMatrix> {
        build_features(clip, self.selection, self.interpolate)
    }
}

/// Forward activations of a batch, tied to the parameters that made them.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    lstm: LstmCache,
    /// `(B, H)` survivors scale, or `None` in evaluation mode.
    mask: Option<Array2<f64>>,
    dropped: Array2<f64>,
    pub probabilities: Array1<f64>,
}

impl ForwardCache {
    pub fn lstm(&self) -> &LstmCache {
        &self.lstm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParameters,
    /// Feature pipeline the model was trained with, when known.
    pub features: Option<FeatureSpec>,
}

impl Model {
    pub fn new(config: ModelConfig, params: ModelParameters) -> Result<Self> {
        config.validate()?;
        params.check_shapes()?;
        if params.input_dim() != config.input_dim || params.hidden_units() != config.hidden_units {
            return Err(Error::Dimension(format!(
                "parameters are D={} H={} but config says D={} H={}",
                params.input_dim(),
                params.hidden_units(),
                config.input_dim,
                config.hidden_units
            )));
        }
        Ok(Model {
            config,
            params,
            features: None,
        })
    }

    /// Freshly initialized model seeded from `config.seed`.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = ModelParameters::init(config.input_dim, config.hidden_units, &mut rng);
        Model::new(config, params)
    }

    pub fn with_features(mut self, features: FeatureSpec) -> Self {
        self.features = Some(features);
        self
    }

    /// Inverted-dropout scale matrix: 0 with probability `dropout_rate`,
    /// otherwise `1 / (1 - dropout_rate)`.
    pub fn dropout_mask<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Array2<f64> {
        let rate = self.config.dropout_rate;
        let keep = 1.0 / (1.0 - rate);
        Array2::from_shape_fn((batch, self.config.hidden_units), |_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep
            }
        })
    }

    /// Batched forward pass. `mask` switches training-mode dropout on.
    pub fn forward_batch(
        &self,
        xs: &[&FeatureMatrix],
        mask: Option<Array2<f64>>,
    ) -> Result<ForwardCache> {
        let lstm = lstm_forward_batch(&self.params, xs)?;
        let mut dropped = lstm.final_hidden().to_owned();
        if let Some(mask) = &mask {
            if mask.dim() != dropped.dim() {
                return Err(Error::Dimension(format!(
                    "dropout mask {:?} does not match hidden output {:?}",
                    mask.dim(),
                    dropped.dim()
                )));
            }
            dropped *= mask;
        }
        let logits = dropped.dot(&self.params.w_out) + self.params.b_out;
        let probabilities = logits.mapv(sigmoid);
        Ok(ForwardCache {
            lstm,
            mask,
            dropped,
            probabilities,
        })
    }

    /// Probability of hand flapping for one feature matrix. In training
    /// mode the dropout mask is drawn from `dropout_seed`.
    pub fn forward(&self, x: &FeatureMatrix, training: bool, dropout_seed: u64) -> Result<f64> {
        let mask = training.then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
            self.dropout_mask(1, &mut rng)
        });
        Ok(self.forward_batch(&[x], mask)?.probabilities[0])
    }

    /// Gradients of the summed BCE loss over the batch.
    ///
    /// The output gradient is taken in logit space, `p - y`, which is the
    /// derivative of the unclamped loss.
    pub fn backward(&self, cache: &ForwardCache, targets: &[u8]) -> Result<ModelParameters> {
        let batch = cache.probabilities.len();
        if targets.len() != batch {
            return Err(Error::Dimension(format!(
                "{} targets for a batch of {batch}",
                targets.len()
            )));
        }
        let d_logit: Array1<f64> = cache
            .probabilities
            .iter()
            .zip(targets)
            .map(|(p, &y)| p - f64::from(y))
            .collect();

        let mut d_h = d_logit
            .view()
            .insert_axis(Axis(1))
            .dot(&self.params.w_out.view().insert_axis(Axis(0)));
        if let Some(mask) = &cache.mask {
            d_h *= mask;
        }
        let mut grads = lstm_backward(&self.params, &cache.lstm, &d_h)?;
        grads.w_out = cache.dropped.t().dot(&d_logit);
        grads.b_out = d_logit.sum();
        Ok(grads)
    }

    pub fn check_input_dim(&self, selection: FeatureSelection) -> Result<()> {
        let dim = effective_dim(selection);
        if dim != self.config.input_dim {
            return Err(Error::Dimension(format!(
                "features `{selection}` produce {dim} columns but the model expects {}",
                self.config.input_dim
            )));
        }
        Ok(())
    }

    /// Evaluation-mode probability for a clip.
    pub fn predict(&self, clip: &Clip, selection: FeatureSelection, interpolate: bool) -> Result<f64> {
        self.check_input_dim(selection)?;
        let x = build_features(clip, selection, interpolate)?;
        self.forward(&x, false, 0)
    }

    /// Evaluation-mode probabilities, in chunks of `chunk` sequences.
    pub fn predict_matrices(&self, xs: &[&FeatureMatrix], chunk: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(xs.len());
        for part in xs.chunks(chunk.max(1)) {
            out.extend(self.forward_batch(part, None)?.probabilities.iter());
        }
        Ok(out)
    }
}

pub fn predicted_label(p: f64) -> u8 {
    u8::from(p > DECISION_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmark::{synth_generate, Label};

    fn tiny(d: usize, h: usize, seed: u64) -> Model {
        Model::init(ModelConfig {
            input_dim: d,
            hidden_units: h,
            seed,
            ..ModelConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn bce_values() {
        assert!((bce_loss(0.5, 1) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce_loss(1.0 - 1e-7, 1) - 1e-7).abs() < 1e-12);
        assert!((bce_loss(1e-7, 1) - 16.118_095_650_958_32).abs() < 1e-9);
        assert!((bce_loss(0.0, 1) - bce_loss(1e-7, 1)).abs() < 1e-12);
        assert!(bce_loss(0.3, 0) > 0.0);
    }

    #[test]
    fn zero_output_layer_gives_half() {
        let mut model = tiny(6, 4, 1);
        model.params.w_out.fill(0.0);
        model.params.b_out = 0.0;
        let clip = synth_generate(Label::HandFlapping, 30, 30.0, 0);
        let p = model.predict(&clip, FeatureSelection::MeanLandmark, false).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn eval_mode_ignores_dropout_seed() {
        let model = tiny(6, 4, 2);
        let x = build_features(&synth_generate(Label::Control, 90, 30.0, 1), FeatureSelection::MeanLandmark, false).unwrap();
        let a = model.forward(&x, false, 1).unwrap();
        let b = model.forward(&x, false, 999).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn zero_instance_bias_gradient() {
        let model = Model::new(
            ModelConfig {
                input_dim: 3,
                hidden_units: 2,
                ..ModelConfig::default()
            },
            ModelParameters::zeros(3, 2),
        )
        .unwrap();
        let x = FeatureMatrix::zeros(4, 3);
        for y in [0u8, 1] {
            let cache = model.forward_batch(&[&x], None).unwrap();
            let g = model.backward(&cache, &[y]).unwrap();
            assert_eq!(g.b_out, 0.5 - f64::from(y));
        }
    }

    #[test]
    fn duplicated_example_doubles_gradient() {
        let model = tiny(3, 2, 4);
        let x = FeatureMatrix::from_array(Array2::from_shape_fn((5, 3), |(t, d)| {
            ((t * 3 + d) as f64 * 0.37).sin()
        }));
        let single = model.backward(&model.forward_batch(&[&x], None).unwrap(), &[1]).unwrap();
        let double = model
            .backward(&model.forward_batch(&[&x, &x], None).unwrap(), &[1, 1])
            .unwrap();
        for (a, b) in single.to_flat().iter().zip(double.to_flat()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut model = tiny(3, 2, 5);
        let x = FeatureMatrix::zeros(3, 3);
        let cache = model.forward_batch(&[&x], None).unwrap();
        model.params.w[[0, 0]] += 0.1;
        assert!(model.backward(&cache, &[1]).is_err());
        assert!(model.backward(&model.forward_batch(&[&x], None).unwrap(), &[1, 0]).is_err());
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let model = tiny(126, 4, 1);
        let clip = synth_generate(Label::HandFlapping, 10, 30.0, 0);
        assert!(matches!(
            model.predict(&clip, FeatureSelection::Six, false),
            Err(Error::Dimension(_))
        ));
    }
}
