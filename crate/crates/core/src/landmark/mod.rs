//! Landmark-sequence data model.
//!
//! A [`Clip`] is a labeled run of [`LandmarkFrame`]s. Every frame always
//! carries both hands: a hand the detector missed is an all-zero
//! [`HandFrame`] rather than an `Option`, so feature code never branches on
//! presence.

mod io;
mod manifest;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_clip, save_clip, write_clip};
pub use manifest::{DatasetManifest, ManifestEntry};
pub use synth::{synth_generate, synth_generate_with, SynthParams};

/// Landmarks per hand, numbered wrist = 0 through pinky tip = 20.
pub const NUM_LANDMARKS: usize = 21;

/// Minimum clip duration admitted to a dataset (inclusive).
pub const MIN_CLIP_DURATION_S: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub detected: bool,
}

impl LandmarkPoint {
    pub const MISSING: LandmarkPoint = LandmarkPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        detected: false,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        LandmarkPoint {
            x,
            y,
            z,
            detected: true,
        }
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn validate(&self) -> Result<()> {
        if !self.detected {
            // bitwise: -0.0 is not a valid missing marker in memory
            if self.x.to_bits() != 0 || self.y.to_bits() != 0 || self.z.to_bits() != 0 {
                return Err(Error::validation(
                    "undetected landmark must have coordinates (0, 0, 0)",
                ));
            }
            return Ok(());
        }
        if !(0.0..=1.0).contains(&self.x) || !(0.0..=1.0).contains(&self.y) {
            return Err(Error::validation(format!(
                "detected landmark out of range: x={} y={}",
                self.x, self.y
            )));
        }
        if !self.z.is_finite() {
            return Err(Error::validation("landmark z is not finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Handedness {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandFrame {
    pub handedness: Handedness,
    pub score: f64,
    pub points: [LandmarkPoint; NUM_LANDMARKS],
}

impl HandFrame {
    pub fn absent(handedness: Handedness) -> Self {
        HandFrame {
            handedness,
            score: 0.0,
            points: [LandmarkPoint::MISSING; NUM_LANDMARKS],
        }
    }

    /// A hand is present when at least one of its landmarks was detected.
    pub fn is_present(&self) -> bool {
        self.points.iter().any(|p| p.detected)
    }

    pub fn detected_count(&self) -> usize {
        self.points.iter().filter(|p| p.detected).count()
    }

    fn validate(&self, slot: Handedness) -> Result<()> {
        if self.handedness != slot {
            return Err(Error::validation(format!(
                "{:?} hand stored in the {slot:?} slot",
                self.handedness
            )));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::validation(format!(
                "hand score {} outside [0, 1]",
                self.score
            )));
        }
        if !self.is_present() && self.score != 0.0 {
            return Err(Error::validation("absent hand must have score 0"));
        }
        self.points.iter().try_for_each(LandmarkPoint::validate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    pub frame_index: u64,
    /// Seconds from the start of the owning clip.
    pub timestamp_s: f64,
    pub left: HandFrame,
    pub right: HandFrame,
}

impl LandmarkFrame {
    pub fn empty(frame_index: u64, timestamp_s: f64) -> Self {
        LandmarkFrame {
            frame_index,
            timestamp_s,
            left: HandFrame::absent(Handedness::Left),
            right: HandFrame::absent(Handedness::Right),
        }
    }

    pub fn hand(&self, handedness: Handedness) -> &HandFrame {
        match handedness {
            Handedness::Left => &self.left,
            Handedness::Right => &self.right,
        }
    }

    pub fn hand_mut(&mut self, handedness: Handedness) -> &mut HandFrame {
        match handedness {
            Handedness::Left => &mut self.left,
            Handedness::Right => &mut self.right,
        }
    }

    /// Both hands in feature order: left, then right.
    pub fn hands(&self) -> [&HandFrame; 2] {
        [&self.left, &self.right]
    }

    pub fn hands_mut(&mut self) -> [&mut HandFrame; 2] {
        [&mut self.left, &mut self.right]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "flap")]
    HandFlapping,
    #[serde(rename = "control")]
    Control,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::HandFlapping => "flap",
            Label::Control => "control",
        }
    }

    /// Binary target: 1 for hand flapping, 0 for control.
    pub fn target(self) -> u8 {
        match self {
            Label::HandFlapping => 1,
            Label::Control => 0,
        }
    }

    pub fn from_target(target: u8) -> Self {
        if target == 1 {
            Label::HandFlapping
        } else {
            Label::Control
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flap" => Ok(Label::HandFlapping),
            "control" => Ok(Label::Control),
            other => Err(Error::validation(format!(
                "unknown label `{other}` (expected `flap` or `control`)"
            ))),
        }
    }
}

/// A time-bounded landmark sequence cut from a source video.
///
/// `label` is `None` for whole-video sequences that have not been through
/// segmentation yet.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub clip_id: String,
    pub source_video_id: String,
    pub label: Option<Label>,
    pub start_s: f64,
    pub end_s: f64,
    pub fps: f64,
    pub frames: Vec<LandmarkFrame>,
}

impl Clip {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Whether the clip is long enough to enter a dataset manifest.
    pub fn is_admissible(&self) -> bool {
        self.duration_s() >= MIN_CLIP_DURATION_S - 1e-9
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start_s.is_finite() && self.end_s.is_finite()) || self.end_s <= self.start_s {
            return Err(Error::validation(format!(
                "clip {}: end_s ({}) must exceed start_s ({})",
                self.clip_id, self.end_s, self.start_s
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::validation(format!(
                "clip {}: fps must be positive, got {}",
                self.clip_id, self.fps
            )));
        }
        let mut previous: Option<u64> = None;
        for frame in &self.frames {
            if let Some(prev) = previous {
                if frame.frame_index <= prev {
                    return Err(Error::validation(format!(
                        "clip {}: frame_index {} does not follow {}",
                        self.clip_id, frame.frame_index, prev
                    )));
                }
            }
            previous = Some(frame.frame_index);
            if !frame.timestamp_s.is_finite() {
                return Err(Error::validation(format!(
                    "clip {}: non-finite timestamp at frame {}",
                    self.clip_id, frame.frame_index
                )));
            }
            frame
                .left
                .validate(Handedness::Left)
                .and_then(|_| frame.right.validate(Handedness::Right))
                .map_err(|e| {
                    Error::validation(format!(
                        "clip {} frame {}: {}",
                        self.clip_id, frame.frame_index, e
                    ))
                })?;
        }
        Ok(())
    }

    /// Iterator over every detected landmark of every frame.
    pub fn detected_points(&self) -> impl Iterator<Item = &LandmarkPoint> {
        self.frames
            .iter()
            .flat_map(|f| f.hands())
            .flat_map(|h| h.points.iter())
            .filter(|p| p.detected)
    }
}
