//! Synthetic landmark sequences for tests and benchmarks.
//!
//! Flapping clips oscillate both hands horizontally at 3-5 Hz; control
//! clips drift slowly. Both get coordinate noise and whole-hand detection
//! dropout.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Clip, HandFrame, Handedness, Label, LandmarkFrame, LandmarkPoint, NUM_LANDMARKS};

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub flap_freq_hz: (f64, f64),
    pub flap_amplitude: (f64, f64),
    /// Control drift frequency range; upper bound stays below 0.5 Hz.
    pub drift_freq_hz: (f64, f64),
    pub drift_amplitude_max: f64,
    pub noise_sigma: f64,
    pub dropout_prob: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            flap_freq_hz: (3.0, 5.0),
            flap_amplitude: (0.1, 0.2),
            drift_freq_hz: (0.05, 0.45),
            drift_amplitude_max: 0.05,
            noise_sigma: 0.005,
            dropout_prob: 0.05,
        }
    }
}

/// Hand template relative to the hand center: wrist at the bottom, five
/// fingers of four joints each fanning upwards. Spans at most +/-0.06 in x.
fn hand_template(handedness: Handedness) -> [[f64; 3]; NUM_LANDMARKS] {
    let mirror = match handedness {
        Handedness::Left => 1.0,
        Handedness::Right => -1.0,
    };
    let mut points = [[0.0; 3]; NUM_LANDMARKS];
    points[0] = [0.0, 0.08, 0.0];
    for finger in 0..5 {
        let spread = (finger as f64 - 2.0) * 0.022;
        let (base_y, step) = if finger == 0 {
            (0.06, 0.014)
        } else {
            (0.02, 0.02)
        };
        for joint in 0..4 {
            let lean = if finger == 0 { 0.008 * joint as f64 } else { 0.0 };
            points[1 + finger * 4 + joint] = [
                mirror * (spread - lean),
                base_y - step * joint as f64,
                -0.01 * (joint as f64 + 1.0),
            ];
        }
    }
    points
}

/// Rounds to single precision, like extractor output.
fn single(v: f64) -> f64 {
    v as f32 as f64
}

struct HandMotion {
    center: (f64, f64),
    scale: f64,
    amplitude_x: f64,
    amplitude_y: f64,
    freq: f64,
    phase: f64,
}

/// Generates one synthetic clip; fully determined by `seed`.
///
/// Panics if `n_frames == 0` or `fps` is not positive.
pub fn synth_generate(label: Label, n_frames: usize, fps: f64, seed: u64) -> Clip {
    synth_generate_with(&SynthParams::default(), label, n_frames, fps, seed)
}

pub fn synth_generate_with(
    params: &SynthParams,
    label: Label,
    n_frames: usize,
    fps: f64,
    seed: u64,
) -> Clip {
    assert!(n_frames >= 1, "synthetic clip needs at least one frame");
    assert!(fps.is_finite() && fps > 0.0, "fps must be positive");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.noise_sigma).expect("valid sigma");

    let motion_for = |rng: &mut ChaCha8Rng, cx_range: (f64, f64)| {
        let center = (
            rng.random_range(cx_range.0..cx_range.1),
            rng.random_range(0.35..0.65),
        );
        let scale = rng.random_range(0.8..1.2);
        let phase = rng.random_range(0.0..TAU);
        match label {
            Label::HandFlapping => HandMotion {
                center,
                scale,
                amplitude_x: rng.random_range(params.flap_amplitude.0..=params.flap_amplitude.1),
                amplitude_y: 0.0,
                freq: rng.random_range(params.flap_freq_hz.0..=params.flap_freq_hz.1),
                phase,
            },
            Label::Control => HandMotion {
                center,
                scale,
                amplitude_x: rng.random_range(0.0..=params.drift_amplitude_max),
                amplitude_y: rng.random_range(0.0..=params.drift_amplitude_max),
                freq: rng.random_range(params.drift_freq_hz.0..params.drift_freq_hz.1),
                phase,
            },
        }
    };
    let left = motion_for(&mut rng, (0.3, 0.45));
    let right = motion_for(&mut rng, (0.55, 0.7));
    let templates = [
        hand_template(Handedness::Left),
        hand_template(Handedness::Right),
    ];

    let frames = (0..n_frames)
        .map(|i| {
            let t = i as f64 / fps;
            let mut frame = LandmarkFrame::empty(i as u64, t);
            for (slot, (motion, template)) in [Handedness::Left, Handedness::Right]
                .into_iter()
                .zip([&left, &right].into_iter().zip(&templates))
            {
                if rng.random_bool(params.dropout_prob) {
                    continue;
                }
                let angle = TAU * motion.freq * t + motion.phase;
                let dx = motion.amplitude_x * angle.sin();
                let dy = motion.amplitude_y * angle.cos();
                let mut hand = HandFrame::absent(slot);
                hand.score = rng.random_range(0.8..=1.0);
                for (point, offset) in hand.points.iter_mut().zip(template) {
                    let x = motion.center.0 + motion.scale * offset[0] + dx + noise.sample(&mut rng);
                    let y = motion.center.1 + motion.scale * offset[1] + dy + noise.sample(&mut rng);
                    let z = motion.scale * offset[2] + noise.sample(&mut rng);
                    // keep clear of the exact origin, which reads back as "undetected"
                    *point = LandmarkPoint::new(
                        single(x.clamp(1e-6, 1.0)),
                        single(y.clamp(1e-6, 1.0)),
                        if z.abs() < 1e-6 { 0.0 } else { single(z) },
                    );
                }
                *frame.hand_mut(slot) = hand;
            }
            frame
        })
        .collect();

    let tag = match label {
        Label::HandFlapping => "flap",
        Label::Control => "control",
    };
    Clip {
        clip_id: format!("synth_{tag}_{seed}"),
        source_video_id: format!("synth_{tag}_{seed}"),
        label: Some(label),
        start_s: 0.0,
        end_s: n_frames as f64 / fps,
        fps,
        frames,
    }
}
