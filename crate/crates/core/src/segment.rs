//! Shot segmentation and fixed-length clip extraction.
//!
//! The chain for one video is: head/tail trim (real sources only), boundary
//! detection over per-frame transition probabilities, per-shot trim, then
//! back-to-back clips of `clip_len` from the start of each shot.

use serde::{Deserialize, Serialize};

use crate::manifest::{ClipRecord, Source, VideoRecord};
use crate::time::{Millis, Span};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub boundary_threshold: f64,
    pub head_tail_trim_s: f64,
    pub shot_trim_s: f64,
    pub clip_len_s: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            boundary_threshold: 0.4,
            head_tail_trim_s: 120.0,
            shot_trim_s: 5.0,
            clip_len_s: 60.0,
        }
    }
}

/// Per-frame shot-transition probabilities for one video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSeries {
    pub fps: f64,
    pub probs: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSegment {
    pub video_id: String,
    pub start_s: Millis,
    pub end_s: Millis,
}

impl ShotSegment {
    pub fn span(&self) -> Span {
        Span::new(self.start_s, self.end_s)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SegmentError {
    #[error("video {video_id} lasts {duration}, not longer than twice the {trim} head/tail trim")]
    TooShort {
        video_id: String,
        duration: Millis,
        trim: Millis,
    },
    #[error("transition series for {video_id} has {got} frames, expected {expected} (±1)")]
    SeriesLength {
        video_id: String,
        got: usize,
        expected: usize,
    },
    #[error("transition series for {video_id} has probability {value} at frame {frame}, outside [0,1]")]
    SeriesValue { video_id: String, frame: usize, value: f32 },
}

/// Usable part of a video after dropping opening and ending material.
/// Game captures are used whole.
pub fn head_tail_trim(video: &VideoRecord, trim: Millis) -> Result<Span, SegmentError> {
    if video.source == Source::Game {
        return Ok(video.span());
    }
    if video.duration_s <= Millis(2 * trim.0) {
        return Err(SegmentError::TooShort {
            video_id: video.video_id.clone(),
            duration: video.duration_s,
            trim,
        });
    }
    Ok(Span::new(trim, video.duration_s - trim))
}

/// One boundary per maximal run of frames with probability `>= threshold`,
/// placed at the run's first frame.
pub fn detect_boundaries(probs: &[f32], threshold: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut in_run = false;
    for (i, &p) in probs.iter().enumerate() {
        let hit = p as f64 >= threshold;
        if hit && !in_run {
            out.push(i);
        }
        in_run = hit;
    }
    out
}

/// Splits `usable` at the boundary frames and trims `shot_trim` from both ends
/// of every piece. Pieces that end up empty are dropped.
pub fn build_shots(
    video_id: &str,
    usable: Span,
    boundaries: &[usize],
    fps: f64,
    shot_trim: Millis,
) -> Vec<ShotSegment> {
    let mut cuts = vec![usable.start];
    cuts.extend(
        boundaries
            .iter()
            .map(|&b| Millis::of_frame(b as i64, fps))
            .filter(|&t| t > usable.start && t < usable.end),
    );
    cuts.push(usable.end);
    cuts.dedup();

    cuts.windows(2)
        .filter_map(|w| {
            let (start, end) = (w[0] + shot_trim, w[1] - shot_trim);
            (end > start).then(|| ShotSegment {
                video_id: video_id.to_string(),
                start_s: start,
                end_s: end,
            })
        })
        .collect()
}

/// Stable clip id: parent id plus the clip start in milliseconds.
pub fn clip_id(video_id: &str, start: Millis) -> String {
    format!("{video_id}-c{:09}", start.0)
}

/// Back-to-back clips of `clip_len` covering the longest prefix of the shot,
/// starting exactly at the shot start.
pub fn extract_clips(shot: &ShotSegment, clip_len: Millis) -> Vec<ClipRecord> {
    let mut out = Vec::new();
    if clip_len <= Millis::ZERO {
        return out;
    }
    let mut start = shot.start_s;
    while start + clip_len <= shot.end_s {
        out.push(ClipRecord::new(
            clip_id(&shot.video_id, start),
            shot.video_id.clone(),
            Span::new(start, start + clip_len),
        ));
        start = start + clip_len;
    }
    out
}

/// Expected frame count of a transition series (±1 frame tolerated).
pub fn expected_frames(duration: Millis, fps: f64) -> usize {
    (duration.as_secs_f64() * fps).round().max(0.0) as usize
}

pub fn check_series(video: &VideoRecord, series: &TransitionSeries) -> Result<(), SegmentError> {
    let expected = expected_frames(video.duration_s, video.fps);
    if series.probs.len().abs_diff(expected) > 1 {
        return Err(SegmentError::SeriesLength {
            video_id: video.video_id.clone(),
            got: series.probs.len(),
            expected,
        });
    }
    if let Some((frame, &value)) = series
        .probs
        .iter()
        .enumerate()
        .find(|(_, p)| !(0.0..=1.0).contains(*p))
    {
        return Err(SegmentError::SeriesValue {
            video_id: video.video_id.clone(),
            frame,
            value,
        });
    }
    Ok(())
}

/// Full chain for one video.
pub fn segment_video(
    video: &VideoRecord,
    series: &TransitionSeries,
    cfg: &SegmentConfig,
) -> Result<Vec<ClipRecord>, SegmentError> {
    check_series(video, series)?;
    let usable = head_tail_trim(video, Millis::from_secs_f64(cfg.head_tail_trim_s))?;
    let boundaries = detect_boundaries(&series.probs, cfg.boundary_threshold);
    let shots = build_shots(
        &video.video_id,
        usable,
        &boundaries,
        video.fps,
        Millis::from_secs_f64(cfg.shot_trim_s),
    );
    let clip_len = Millis::from_secs_f64(cfg.clip_len_s);
    Ok(shots
        .iter()
        .flat_map(|s| extract_clips(s, clip_len))
        .collect())
}
