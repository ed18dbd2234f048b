//! Positive/control span planning from behavior annotations.
//!
//! Hand-flapping intervals become positive spans. Everything in the video
//! not covered by an annotation of any behavior becomes control material.
//! Both sides are chunked greedily from the left into pieces of at most
//! 5 s; pieces shorter than 2 s are dropped.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmark::{Clip, Label, MIN_CLIP_DURATION_S};

pub const MAX_CLIP_DURATION_S: f64 = 5.0;

/// Slack for comparing second boundaries that went through float arithmetic.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    #[serde(rename = "flap")]
    HandFlapping,
    #[serde(rename = "headbang")]
    HeadBanging,
    #[serde(rename = "spin")]
    Spinning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub video_id: String,
    pub behavior: Behavior,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub start_s: f64,
    pub end_s: f64,
}

impl Span {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Span { start_s, end_s }
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start_s < other.end_s - EPS && other.start_s < self.end_s - EPS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanPlan {
    pub video_id: String,
    pub positives: Vec<Span>,
    pub controls: Vec<Span>,
}

/// Reads an annotation CSV (`video_id,behavior,start_s,end_s`).
pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<Annotation>, _>>()
        .map_err(|e| Error::csv(path, e))
}

/// Groups annotations by video id, in id order.
pub fn group_by_video(annotations: Vec<Annotation>) -> BTreeMap<String, Vec<Annotation>> {
    let mut grouped: BTreeMap<String, Vec<Annotation>> = BTreeMap::new();
    for a in annotations {
        grouped.entry(a.video_id.clone()).or_default().push(a);
    }
    grouped
}

fn merge(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut merged: Vec<Span> = Vec::with_capacity(spans.len());
    for span in spans {
        match merged.last_mut() {
            Some(last) if span.start_s <= last.end_s + EPS => {
                last.end_s = last.end_s.max(span.end_s);
            }
            _ => merged.push(span),
        }
    }
    merged
}

/// Cuts a span into consecutive pieces of at most [`MAX_CLIP_DURATION_S`],
/// keeping the trailing piece only if it reaches [`MIN_CLIP_DURATION_S`].
fn chunk(span: Span, out: &mut Vec<Span>) {
    let mut start = span.start_s;
    while span.end_s - start > MAX_CLIP_DURATION_S + EPS {
        out.push(Span::new(start, start + MAX_CLIP_DURATION_S));
        start += MAX_CLIP_DURATION_S;
    }
    if span.end_s - start >= MIN_CLIP_DURATION_S - EPS {
        out.push(Span::new(start, span.end_s));
    }
}

fn complement(covered: &[Span], total: Span) -> Vec<Span> {
    let mut gaps = Vec::new();
    let mut cursor = total.start_s;
    for span in covered {
        if span.start_s > cursor + EPS {
            gaps.push(Span::new(cursor, span.start_s));
        }
        cursor = cursor.max(span.end_s);
    }
    if total.end_s > cursor + EPS {
        gaps.push(Span::new(cursor, total.end_s));
    }
    gaps
}

pub fn plan_spans(
    video_id: &str,
    annotations: &[Annotation],
    video_duration_s: f64,
) -> Result<SpanPlan> {
    if !(video_duration_s.is_finite() && video_duration_s > 0.0) {
        return Err(Error::validation(format!(
            "video {video_id}: duration must be positive, got {video_duration_s}"
        )));
    }
    for a in annotations {
        if a.video_id != video_id {
            return Err(Error::validation(format!(
                "annotation for video {} passed while planning {video_id}",
                a.video_id
            )));
        }
        if !(a.start_s >= 0.0 && a.end_s > a.start_s) {
            return Err(Error::validation(format!(
                "video {video_id}: invalid annotation interval [{}, {}]",
                a.start_s, a.end_s
            )));
        }
        if a.end_s > video_duration_s + EPS {
            return Err(Error::validation(format!(
                "video {video_id}: annotation [{}, {}] exceeds video duration {video_duration_s}",
                a.start_s, a.end_s
            )));
        }
    }

    let flapping = merge(
        annotations
            .iter()
            .filter(|a| a.behavior == Behavior::HandFlapping)
            .map(|a| Span::new(a.start_s, a.end_s))
            .collect(),
    );
    let any_behavior = merge(
        annotations
            .iter()
            .map(|a| Span::new(a.start_s, a.end_s))
            .collect(),
    );

    let mut positives = Vec::new();
    for span in flapping {
        chunk(span, &mut positives);
    }
    let mut controls = Vec::new();
    for gap in complement(&any_behavior, Span::new(0.0, video_duration_s)) {
        chunk(gap, &mut controls);
    }

    Ok(SpanPlan {
        video_id: video_id.to_string(),
        positives,
        controls,
    })
}

/// Extracts the frames of `source` whose absolute time lies in
/// `[span.start_s, span.end_s)`, re-indexed from 0 with timestamps relative
/// to the span start.
pub fn cut_clip(source: &Clip, span: Span, label: Label, clip_id: &str) -> Result<Clip> {
    if !(span.end_s > span.start_s) {
        return Err(Error::validation(format!(
            "empty span [{}, {}]",
            span.start_s, span.end_s
        )));
    }
    if span.start_s < source.start_s - EPS || span.end_s > source.end_s + EPS {
        return Err(Error::validation(format!(
            "span [{}, {}] outside source range [{}, {}] of {}",
            span.start_s, span.end_s, source.start_s, source.end_s, source.clip_id
        )));
    }
    let frames: Vec<_> = source
        .frames
        .iter()
        .filter(|f| {
            let t = source.start_s + f.timestamp_s;
            t >= span.start_s - EPS && t < span.end_s - EPS
        })
        .enumerate()
        .map(|(i, f)| {
            let mut frame = f.clone();
            frame.frame_index = i as u64;
            frame.timestamp_s = source.start_s + f.timestamp_s - span.start_s;
            frame
        })
        .collect();
    if frames.is_empty() {
        return Err(Error::validation(format!(
            "span [{}, {}] of {} contains no frames",
            span.start_s, span.end_s, source.clip_id
        )));
    }
    Ok(Clip {
        clip_id: clip_id.to_string(),
        source_video_id: source.source_video_id.clone(),
        label: Some(label),
        start_s: span.start_s,
        end_s: span.end_s,
        fps: source.fps,
        frames,
    })
}
