//! Independent oracles and generators shared by the integration tests.

#![allow(dead_code)]

use handflap::augmentation::{apply_augmentation, sample_augmentation};
use handflap::features::FeatureMatrix;
use handflap::landmark::{Clip, HandFrame, Handedness, Label, LandmarkFrame, LandmarkPoint};
use handflap::neuralnet::{bce_loss, Model, ModelConfig, ModelParameters};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// O(n^2) pairwise-ranking statistic: P(score+ > score-) with ties as 1/2.
pub fn pairwise_auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Plain floating-point trapezoid rule over ROC points.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// A coordinate on a 2^-20 grid, which keeps it representable in single
/// precision.
fn grid(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let step = 1.0 / f64::from(1u32 << 20);
    let v = rng.random_range(lo..=hi);
    (v / step).round() * step
}

/// Random valid clip: arbitrary hand placement (including at the image
/// edges), per-hand and per-landmark dropout.
pub fn random_clip(rng: &mut ChaCha8Rng, n_frames: usize) -> Clip {
    let fps = 30.0;
    let spread: f64 = rng.random_range(0.0..0.5);
    let center: (f64, f64) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
    let hand_drop = rng.random_range(0.0..0.6);
    let point_drop = rng.random_range(0.0..0.3);
    let frames = (0..n_frames)
        .map(|i| {
            let mut frame = LandmarkFrame::empty(i as u64, i as f64 / fps);
            for slot in [Handedness::Left, Handedness::Right] {
                if rng.random_bool(hand_drop) {
                    continue;
                }
                let mut hand = HandFrame::absent(slot);
                for point in hand.points.iter_mut() {
                    if rng.random_bool(point_drop) {
                        continue;
                    }
                    let x = grid(rng, (center.0 - spread).max(0.0), (center.0 + spread).min(1.0));
                    let y = grid(rng, (center.1 - spread).max(0.0), (center.1 + spread).min(1.0));
                    let z = grid(rng, -0.3, 0.3);
                    if x == 0.0 && y == 0.0 && z == 0.0 {
                        continue;
                    }
                    *point = LandmarkPoint::new(x, y, z);
                }
                if hand.is_present() {
                    hand.score = rng.random_range(0.5..=1.0);
                }
                *frame.hand_mut(slot) = hand;
            }
            frame
        })
        .collect();
    Clip {
        clip_id: "random".into(),
        source_video_id: "random".into(),
        label: Some(if rng.random_bool(0.5) {
            Label::HandFlapping
        } else {
            Label::Control
        }),
        start_s: 0.0,
        end_s: n_frames as f64 / fps,
        fps,
        frames,
    }
}

/// Checks bounds, zero preservation and offset constancy for one
/// (clip, seed) pair. Returns a description of the first violation.
pub fn augmentation_violation(clip: &Clip, seed: u64) -> Option<String> {
    let params = sample_augmentation(clip, seed);
    let out = match apply_augmentation(clip, params) {
        Ok(out) => out,
        Err(e) => return Some(format!("apply failed: {e}")),
    };
    let mut reference: Option<[f64; 3]> = None;
    for (before, after) in clip.frames.iter().zip(&out.frames) {
        for (hb, ha) in before.hands().into_iter().zip(after.hands()) {
            for (pb, pa) in hb.points.iter().zip(&ha.points) {
                if pb.detected != pa.detected {
                    return Some("detection set changed".into());
                }
                if !pb.detected {
                    if pa.coords() != [0.0; 3] {
                        return Some("undetected landmark moved".into());
                    }
                    continue;
                }
                if !(0.0..=1.0).contains(&pa.x) || !(0.0..=1.0).contains(&pa.y) {
                    return Some(format!("({}, {}) out of bounds", pa.x, pa.y));
                }
                let shift = [pa.x - pb.x, pa.y - pb.y, pa.z - pb.z];
                match reference {
                    None => reference = Some(shift),
                    Some(r) if r != shift => {
                        return Some(format!("shift {shift:?} differs from {r:?}"))
                    }
                    _ => {}
                }
            }
        }
    }
    None
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

fn summed_loss(model: &Model, xs: &[&FeatureMatrix], mask: &Option<Array2<f64>>, y: &[u8]) -> f64 {
    let cache = model.forward_batch(xs, mask.clone()).unwrap();
    cache
        .probabilities
        .iter()
        .zip(y)
        .map(|(&p, &t)| bce_loss(p, t))
        .sum()
}

/// Largest relative error between analytic and central-difference
/// gradients over every parameter of one random small instance.
pub fn gradient_check(rng: &mut ChaCha8Rng, step: f64) -> (f64, usize) {
    let d = rng.random_range(3..=8);
    let h = rng.random_range(2..=5);
    let t = rng.random_range(2..=6);
    let batch = rng.random_range(1..=3);
    let config = ModelConfig {
        input_dim: d,
        hidden_units: h,
        ..ModelConfig::default()
    };
    let mut params = ModelParameters::init(d, h, rng);
    params.b.mapv_inplace(|v| v + rng.random_range(-0.5..0.5));
    params.w_out.mapv_inplace(|_| rng.random_range(-1.0..1.0));
    params.b_out = rng.random_range(-0.5..0.5);
    let mut model = Model::new(config, params).unwrap();

    let xs: Vec<FeatureMatrix> = (0..batch)
        .map(|_| FeatureMatrix::from_array(random_matrix(rng, t, d, 1.0)))
        .collect();
    let refs: Vec<&FeatureMatrix> = xs.iter().collect();
    let targets: Vec<u8> = (0..batch).map(|_| rng.random_range(0..=1)).collect();
    let mask = rng
        .random_bool(0.5)
        .then(|| model.dropout_mask(batch, rng));

    let cache = model.forward_batch(&refs, mask.clone()).unwrap();
    let analytic = model.backward(&cache, &targets).unwrap().to_flat();

    let base = model.params.to_flat();
    let mut worst: f64 = 0.0;
    for k in 0..base.len() {
        let mut eval = |delta: f64| {
            let mut shifted = base.clone();
            shifted[k] += delta;
            model.params = ModelParameters::from_flat(d, h, &shifted).unwrap();
            summed_loss(&model, &refs, &mask, &targets)
        };
        let numeric = (eval(step) - eval(-step)) / (2.0 * step);
        worst = worst.max(relative_error(analytic[k], numeric));
    }
    (worst, base.len())
}

/// `|a - n| / max(|a|, |n|)`, with the denominator floored at 1e-7 so that
/// gradients that vanish analytically are compared in absolute terms.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7)
}
