//! Per-clip coordinate-shift augmentation.
//!
//! One offset per axis is drawn for the whole clip and added to every
//! detected landmark of every frame. Undetected landmarks stay at the
//! origin. For x and y the direction is a fair coin and the magnitude is
//! uniform over the room left before a detected landmark would leave
//! `[0, 1]`; z is unbounded so it uses a fixed budget instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmark::Clip;

pub const DEFAULT_Z_SLACK: f64 = 0.1;

/// Offsets are multiples of 2^-24, so adding them to single-precision
/// coordinates (zero, or at least 2^-29 in magnitude) is exact in f64 and
/// frame-to-frame differences are preserved bit for bit.
pub const OFFSET_QUANTUM: f64 = 1.0 / (1u64 << 24) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AugmentationParams {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl AugmentationParams {
    pub fn is_identity(&self) -> bool {
        self.dx == 0.0 && self.dy == 0.0 && self.dz == 0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Extent {
    min: f64,
    max: f64,
}

fn extent(values: impl Iterator<Item = f64>) -> Option<Extent> {
    values.fold(None, |acc, v| {
        Some(match acc {
            None => Extent { min: v, max: v },
            Some(e) => Extent {
                min: e.min.min(v),
                max: e.max.max(v),
            },
        })
    })
}

fn quantize(magnitude: f64) -> f64 {
    (magnitude / OFFSET_QUANTUM).floor() * OFFSET_QUANTUM
}

/// Signed offset for a `[0, 1]`-bounded axis.
fn bounded_offset(rng: &mut ChaCha8Rng, extent: Extent) -> f64 {
    let increase = rng.random_bool(0.5);
    let u: f64 = rng.random();
    if increase {
        let mut magnitude = quantize(u * (1.0 - extent.max));
        while magnitude > 0.0 && extent.max + magnitude > 1.0 {
            magnitude -= OFFSET_QUANTUM;
        }
        magnitude.max(0.0)
    } else {
        let mut magnitude = quantize(u * extent.min);
        while magnitude > 0.0 && extent.min - magnitude < 0.0 {
            magnitude -= OFFSET_QUANTUM;
        }
        -magnitude.max(0.0)
    }
}

fn free_offset(rng: &mut ChaCha8Rng, budget: f64) -> f64 {
    let increase = rng.random_bool(0.5);
    let u: f64 = rng.random();
    let magnitude = quantize(u * budget);
    if increase {
        magnitude
    } else {
        -magnitude
    }
}

pub fn sample_augmentation(clip: &Clip, rng_seed: u64) -> AugmentationParams {
    sample_augmentation_with(clip, rng_seed, DEFAULT_Z_SLACK)
}

/// Draws clip-wide offsets. Returns zero offsets when nothing is detected.
pub fn sample_augmentation_with(clip: &Clip, rng_seed: u64, z_slack: f64) -> AugmentationParams {
    let x_extent = extent(clip.detected_points().map(|p| p.x));
    let (Some(x_extent), Some(y_extent)) = (x_extent, extent(clip.detected_points().map(|p| p.y)))
    else {
        return AugmentationParams::default();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let dx = bounded_offset(&mut rng, x_extent);
    let dy = bounded_offset(&mut rng, y_extent);
    let dz = free_offset(&mut rng, z_slack.max(0.0));
    AugmentationParams { dx, dy, dz }
}

/// Shifts every detected landmark by the given offsets.
///
/// Fails if a detected x or y would leave `[0, 1]`.
pub fn apply_augmentation(clip: &Clip, params: AugmentationParams) -> Result<Clip> {
    let mut out = clip.clone();
    for frame in &mut out.frames {
        let index = frame.frame_index;
        for hand in frame.hands_mut() {
            for (lm, point) in hand.points.iter_mut().enumerate() {
                if !point.detected {
                    continue;
                }
                let (x, y) = (point.x + params.dx, point.y + params.dy);
                if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                    return Err(Error::InvalidArgument(format!(
                        "augmentation ({}, {}) moves landmark {lm} of frame {index} in clip {} to ({x}, {y})",
                        params.dx, params.dy, clip.clip_id
                    )));
                }
                point.x = x;
                point.y = y;
                point.z += params.dz;
            }
        }
    }
    Ok(out)
}
