//! Landmark JSON-lines interchange format.
//!
//! One JSON object per line:
//!
//! ```text
//! {"frame_index":0,"t":0.0,"hands":{"left":null,"right":{"score":0.97,"landmarks":[[x,y,z], ...21]}}}
//! ```
//!
//! Files written by this crate start with a clip header line,
//! `{"clip":{"clip_id":..,"source_video_id":..,"label":"flap"|"control"|null,"start_s":..,"end_s":..,"fps":..}}`.
//! Files produced by the landmark extractor have no header; the clip id is
//! then taken from the file stem and the frame rate from the timestamps.
//!
//! An undetected landmark is written as `[0.0,0.0,0.0]` and a hand with no
//! detected landmark as `null`. On read, an all-zero triple means
//! "undetected".

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Clip, HandFrame, Handedness, Label, LandmarkFrame, LandmarkPoint, NUM_LANDMARKS};
use crate::error::{Error, Result};

const DEFAULT_FPS: f64 = 30.0;

#[derive(Debug, Serialize, Deserialize)]
struct HeaderLine {
    clip: ClipHeader,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClipHeader {
    clip_id: String,
    source_video_id: String,
    label: Option<Label>,
    start_s: f64,
    end_s: f64,
    fps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRecord {
    frame_index: u64,
    t: f64,
    hands: HandsRecord,
}

#[derive(Debug, Serialize, Deserialize)]
struct HandsRecord {
    left: Option<HandRecord>,
    right: Option<HandRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HandRecord {
    score: f64,
    landmarks: Vec<[f64; 3]>,
}

impl HandRecord {
    fn from_hand(hand: &HandFrame) -> Option<Self> {
        hand.is_present().then(|| HandRecord {
            score: hand.score,
            landmarks: hand.points.iter().map(LandmarkPoint::coords).collect(),
        })
    }

    fn into_hand(self, handedness: Handedness) -> std::result::Result<HandFrame, String> {
        if self.landmarks.len() != NUM_LANDMARKS {
            return Err(format!(
                "{handedness:?} hand has {} landmarks, expected {NUM_LANDMARKS}",
                self.landmarks.len()
            ));
        }
        let mut hand = HandFrame::absent(handedness);
        for (point, [x, y, z]) in hand.points.iter_mut().zip(self.landmarks) {
            if x != 0.0 || y != 0.0 || z != 0.0 {
                *point = LandmarkPoint::new(x, y, z);
            }
        }
        if hand.is_present() {
            hand.score = self.score;
        }
        Ok(hand)
    }
}

impl FrameRecord {
    fn from_frame(frame: &LandmarkFrame) -> Self {
        FrameRecord {
            frame_index: frame.frame_index,
            t: frame.timestamp_s,
            hands: HandsRecord {
                left: HandRecord::from_hand(&frame.left),
                right: HandRecord::from_hand(&frame.right),
            },
        }
    }

    fn into_frame(self) -> std::result::Result<LandmarkFrame, String> {
        let mut frame = LandmarkFrame::empty(self.frame_index, self.t);
        if let Some(left) = self.hands.left {
            frame.left = left.into_hand(Handedness::Left)?;
        }
        if let Some(right) = self.hands.right {
            frame.right = right.into_hand(Handedness::Right)?;
        }
        Ok(frame)
    }
}

/// Reads and validates a landmark JSON-lines file.
pub fn load_clip(path: impl AsRef<Path>) -> Result<Clip> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut header: Option<ClipHeader> = None;
    let mut frames = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if frames.is_empty() && header.is_none() && text.starts_with("{\"clip\"") {
            let parsed: HeaderLine =
                serde_json::from_str(text).map_err(|e| parse_err(line_no, e.to_string()))?;
            header = Some(parsed.clip);
            continue;
        }
        let record: FrameRecord =
            serde_json::from_str(text).map_err(|e| parse_err(line_no, e.to_string()))?;
        let frame = record
            .into_frame()
            .map_err(|message| parse_err(line_no, message))?;
        frames.push(frame);
    }

    let clip = match header {
        Some(h) => Clip {
            clip_id: h.clip_id,
            source_video_id: h.source_video_id,
            label: h.label,
            start_s: h.start_s,
            end_s: h.end_s,
            fps: h.fps,
            frames,
        },
        None => headerless_clip(path, frames),
    };
    if clip.is_empty() {
        return Err(Error::validation(format!(
            "{}: clip has no frames",
            path.display()
        )));
    }
    clip.validate()
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
    Ok(clip)
}

fn headerless_clip(path: &Path, frames: Vec<LandmarkFrame>) -> Clip {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let fps = match (frames.first(), frames.last()) {
        (Some(first), Some(last)) if last.timestamp_s > first.timestamp_s => {
            let span = last.frame_index.saturating_sub(first.frame_index) as f64;
            let fps = span / (last.timestamp_s - first.timestamp_s);
            if fps.is_finite() && fps > 0.0 {
                fps
            } else {
                DEFAULT_FPS
            }
        }
        _ => DEFAULT_FPS,
    };
    let last_t = frames.last().map_or(0.0, |f| f.timestamp_s);
    Clip {
        clip_id: stem.clone(),
        source_video_id: stem,
        label: None,
        start_s: 0.0,
        end_s: last_t.max(0.0) + 1.0 / fps,
        fps,
        frames,
    }
}

/// Serializes a clip (header line followed by one line per frame).
pub fn write_clip<W: Write>(clip: &Clip, mut out: W) -> Result<()> {
    let to_io = |e: serde_json::Error| std::io::Error::other(e);
    let header = HeaderLine {
        clip: ClipHeader {
            clip_id: clip.clip_id.clone(),
            source_video_id: clip.source_video_id.clone(),
            label: clip.label,
            start_s: clip.start_s,
            end_s: clip.end_s,
            fps: clip.fps,
        },
    };
    let write = |out: &mut W| -> std::io::Result<()> {
        serde_json::to_writer(&mut *out, &header).map_err(to_io)?;
        out.write_all(b"\n")?;
        for frame in &clip.frames {
            serde_json::to_writer(&mut *out, &FrameRecord::from_frame(frame)).map_err(to_io)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io("<writer>", e))
}

pub fn save_clip(clip: &Clip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if clip.is_empty() {
        return Err(Error::validation(format!(
            "refusing to save empty clip {}",
            clip.clip_id
        )));
    }
    clip.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_clip(clip, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}
