//! Clip to fixed-shape feature matrix conversion.
//!
//! Each row is one frame: the selected landmarks of the left hand as
//! consecutive `(x, y, z)` triples in ascending landmark order, then the
//! right hand likewise. Missing landmarks contribute zeros and clips shorter
//! than [`SEQ_LEN`] frames are zero-padded at the tail.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmark::{Clip, HandFrame, LandmarkPoint, NUM_LANDMARKS};

/// Frames fed to the network per clip.
pub const SEQ_LEN: usize = 90;

/// Wrist plus the five fingertips.
pub const SIX_LANDMARKS: [usize; 6] = [0, 4, 8, 12, 16, 20];

const ALL_LANDMARKS: [usize; NUM_LANDMARKS] = [
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FeatureSelection {
    All21,
    Six,
    One(usize),
    MeanLandmark,
}

impl FeatureSelection {
    /// The single-landmark variant at the base of the hand.
    pub const ONE_WRIST: FeatureSelection = FeatureSelection::One(0);

    pub fn validate(&self) -> Result<()> {
        match *self {
            FeatureSelection::One(idx) if idx >= NUM_LANDMARKS => Err(Error::InvalidArgument(
                format!("landmark index {idx} outside 0..=20"),
            )),
            _ => Ok(()),
        }
    }

    /// Landmarks that feed the row; `MeanLandmark` averages over all of them.
    pub fn landmarks(&self) -> &[usize] {
        match self {
            FeatureSelection::All21 | FeatureSelection::MeanLandmark => &ALL_LANDMARKS,
            FeatureSelection::Six => &SIX_LANDMARKS,
            FeatureSelection::One(idx) => std::slice::from_ref(&ALL_LANDMARKS[*idx]),
        }
    }

    /// Landmarks per hand as seen by the network.
    pub fn effective_landmarks(&self) -> usize {
        match self {
            FeatureSelection::MeanLandmark => 1,
            other => other.landmarks().len(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            FeatureSelection::All21 => "all21".into(),
            FeatureSelection::Six => "six".into(),
            FeatureSelection::One(0) => "one".into(),
            FeatureSelection::One(idx) => format!("one:{idx}"),
            FeatureSelection::MeanLandmark => "mean".into(),
        }
    }
}

/// Row width: 3 coordinates x 2 hands per effective landmark.
pub fn effective_dim(selection: FeatureSelection) -> usize {
    6 * selection.effective_landmarks()
}

impl fmt::Display for FeatureSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FeatureSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let selection = match s {
            "all21" => FeatureSelection::All21,
            "six" => FeatureSelection::Six,
            "one" => FeatureSelection::ONE_WRIST,
            "mean" => FeatureSelection::MeanLandmark,
            other => match other.strip_prefix("one:").map(str::parse::<usize>) {
                Some(Ok(idx)) => FeatureSelection::One(idx),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown feature selection `{other}` (expected all21, six, one, one:<index> or mean)"
                    )))
                }
            },
        };
        selection.validate()?;
        Ok(selection)
    }
}

impl From<FeatureSelection> for String {
    fn from(s: FeatureSelection) -> String {
        s.name()
    }
}

impl TryFrom<String> for FeatureSelection {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// `SEQ_LEN x D` network input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    pub fn from_array(values: Array2<f64>) -> Self {
        FeatureMatrix(values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FeatureMatrix(Array2::zeros((rows, cols)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.0.row(t)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Per-frame landmark coordinates of one hand, `None` where undetected.
type HandTrack = Vec<[Option<[f64; 3]>; NUM_LANDMARKS]>;

fn hand_track<'a>(hands: impl Iterator<Item = &'a HandFrame>) -> HandTrack {
    hands
        .map(|hand| {
            let mut row = [None; NUM_LANDMARKS];
            for (slot, point) in row.iter_mut().zip(&hand.points) {
                if point.detected {
                    *slot = Some(point.coords());
                }
            }
            row
        })
        .collect()
}

/// Linear fill of interior gaps, per landmark and coordinate, between the
/// nearest detected frames. Leading and trailing gaps are left missing.
fn interpolate_track(track: &mut HandTrack) {
    for lm in 0..NUM_LANDMARKS {
        let mut previous: Option<usize> = None;
        for t in 0..track.len() {
            let Some(current) = track[t][lm] else {
                continue;
            };
            if let Some(p) = previous {
                if t > p + 1 {
                    let start = track[p][lm].expect("previous frame detected");
                    let span = (t - p) as f64;
                    for (k, slot) in (p + 1..t).enumerate() {
                        let w = (k + 1) as f64 / span;
                        track[slot][lm] =
                            Some(std::array::from_fn(|c| start[c] + (current[c] - start[c]) * w));
                    }
                }
            }
            previous = Some(t);
        }
    }
}

fn write_hand_block(
    row: &mut [f64],
    frame: &[Option<[f64; 3]>; NUM_LANDMARKS],
    selection: FeatureSelection,
) {
    match selection {
        FeatureSelection::MeanLandmark => {
            let mut sum = [0.0; 3];
            let mut n = 0usize;
            for coords in frame.iter().flatten() {
                for c in 0..3 {
                    sum[c] += coords[c];
                }
                n += 1;
            }
            if n > 0 {
                for c in 0..3 {
                    row[c] = sum[c] / n as f64;
                }
            }
        }
        _ => {
            for (k, &lm) in selection.landmarks().iter().enumerate() {
                if let Some(coords) = frame[lm] {
                    row[3 * k..3 * k + 3].copy_from_slice(&coords);
                }
            }
        }
    }
}

/// Builds the network input for `clip` from its first [`SEQ_LEN`] frames.
pub fn build_features(
    clip: &Clip,
    selection: FeatureSelection,
    interpolate: bool,
) -> Result<FeatureMatrix> {
    if clip.is_empty() {
        return Err(Error::validation(format!(
            "clip {} has no frames",
            clip.clip_id
        )));
    }
    selection.validate()?;

    let frames = &clip.frames[..clip.len().min(SEQ_LEN)];
    let mut tracks = [
        hand_track(frames.iter().map(|f| &f.left)),
        hand_track(frames.iter().map(|f| &f.right)),
    ];
    if interpolate {
        tracks.iter_mut().for_each(interpolate_track);
    }

    let dim = effective_dim(selection);
    let block = dim / 2;
    let mut values = Array2::<f64>::zeros((SEQ_LEN, dim));
    for (t, mut row) in values.rows_mut().into_iter().take(frames.len()).enumerate() {
        let row = row.as_slice_mut().expect("standard layout");
        let (left, right) = row.split_at_mut(block);
        write_hand_block(left, &tracks[0][t], selection);
        write_hand_block(right, &tracks[1][t], selection);
    }
    Ok(FeatureMatrix(values))
}

/// Mean of the detected landmarks of one hand, `(0, 0, 0)` if none.
pub fn mean_landmark(hand: &HandFrame) -> [f64; 3] {
    let detected: Vec<&LandmarkPoint> = hand.points.iter().filter(|p| p.detected).collect();
    if detected.is_empty() {
        return [0.0; 3];
    }
    let n = detected.len() as f64;
    std::array::from_fn(|c| detected.iter().map(|p| p.coords()[c]).sum::<f64>() / n)
}
