//! In-process synthetic provider and matching input corpora.
//!
//! Every payload is a pure function of the seed and the request subject, so
//! runs are reproducible without any files. Used for demos, load tests and
//! for writing fixture directories.

use clipcurate_core::filter::SubtitleEvent;
use clipcurate_core::labels::Vocabulary;
use clipcurate_core::manifest::{Manifest, Source, VideoRecord, ViewKind};
use clipcurate_core::segment::{expected_frames, segment_video, SegmentConfig, TransitionSeries};
use clipcurate_core::synth;
use clipcurate_core::time::Millis;
use rand::Rng;

use super::{Backend, Kind, Payload, ProviderError, Raw, Subject};
use crate::config::SyntheticConfig;

pub struct SyntheticBackend {
    cfg: SyntheticConfig,
    vocabulary: Vocabulary,
}

impl SyntheticBackend {
    pub fn new(cfg: SyntheticConfig, vocabulary: Vocabulary) -> Self {
        SyntheticBackend { cfg, vocabulary }
    }

    pub fn payload(&self, kind: Kind, subject: &Subject<'_>) -> Payload {
        let seed = self.cfg.seed;
        let reference = subject.reference();
        let video = subject.video();
        match (kind, subject) {
            (Kind::Transition, _) => Payload::Transition(transitions(seed, video)),
            (Kind::Chapters, _) => {
                let primary = synth::video_location(seed, reference, self.cfg.countries, self.cfg.max_cities_per_country);
                let other = synth::video_location(
                    seed,
                    &format!("{reference}#2"),
                    self.cfg.countries,
                    self.cfg.max_cities_per_country,
                );
                Payload::Chapters(synth::chapters(seed, reference, video.duration_s, &[primary.clone(), primary, other]))
            }
            (Kind::Luma, Subject::Clip { clip, .. }) => {
                let mut r = synth::rng(seed, "luma", reference);
                let n = expected_frames(clip.span().len(), video.fps);
                let base = r.random_range(60.0f32..190.0);
                let mut out: Vec<f32> = (0..n).map(|_| base + r.random_range(-8.0f32..8.0)).collect();
                let defect = if video.source == Source::Game { 0.08 } else { 0.02 };
                if n > 40 && r.random_bool(defect) {
                    let at = r.random_range(0..n - 30);
                    let value = if r.random_bool(0.5) { 3.0 } else { 250.0 };
                    out[at..at + 30].fill(value);
                }
                Payload::Luma(out)
            }
            (Kind::Subtitle, Subject::Clip { clip, .. }) => {
                let mut r = synth::rng(seed, "subtitle", reference);
                let len = clip.span().len().as_secs_f64();
                let mut events = Vec::new();
                if r.random_bool(0.04) && len > 10.0 {
                    let start = r.random_range(0.0..len - 6.0);
                    events.push(SubtitleEvent { y_center_frac: 0.88, start_s: start, end_s: start + r.random_range(1.0..5.0) });
                }
                if r.random_bool(0.1) && len > 3.0 {
                    events.push(SubtitleEvent { y_center_frac: 0.1, start_s: 0.0, end_s: len.min(3.0) });
                }
                Payload::Subtitle(events)
            }
            (Kind::Quality, _) => Payload::Quality(synth::quality_scores(seed, reference)),
            (Kind::Embedding, _) => {
                Payload::Embedding(synth::embedding(seed, reference, self.cfg.embedding_dim, self.cfg.topics))
            }
            (Kind::Pose, Subject::Clip { clip, .. }) => Payload::Pose(synth::trajectory(
                seed,
                reference,
                self.cfg.pose_frames,
                clip.span().len().as_secs_f64(),
            )),
            (Kind::Category, _) => Payload::Category(synth::category_labels(seed, reference, &self.vocabulary)),
            (Kind::Caption, _) => Payload::Caption(synth::caption(seed, reference)),
            (_, Subject::Video(_)) => unreachable!("clip payload requested for a video"),
        }
    }
}

impl Backend for SyntheticBackend {
    fn identity(&self) -> String {
        format!(
            "synthetic:v1:{}:{}",
            serde_json::to_string(&self.cfg).expect("serializable"),
            serde_json::to_string(&self.vocabulary).expect("serializable")
        )
    }

    fn fetch(&self, kind: Kind, subject: &Subject<'_>) -> Result<Raw, ProviderError> {
        if kind.per_video() != matches!(subject, Subject::Video(_)) {
            return Err(ProviderError::Schema {
                kind,
                reference: subject.reference().to_string(),
                message: "request subject does not match the payload kind".into(),
            });
        }
        Ok(Raw::Typed(self.payload(kind, subject)))
    }
}

/// Low background transition probability with three-frame spikes between
/// shots lasting 200 to 900 seconds.
pub fn transitions(seed: u64, video: &VideoRecord) -> TransitionSeries {
    let mut r = synth::rng(seed, "transition", &video.video_id);
    let n = expected_frames(video.duration_s, video.fps);
    let mut probs = vec![0.02f32; n];
    let mut t = 0.0;
    loop {
        t += r.random_range(200.0..900.0);
        let frame = (t * video.fps) as usize;
        if frame >= n {
            break;
        }
        let end = (frame + 3).min(n);
        probs[frame..end].fill(0.9);
    }
    TransitionSeries { fps: video.fps, probs }
}

pub fn video(seed: u64, index: usize) -> VideoRecord {
    let video_id = format!("syn{index:06}");
    let mut r = synth::rng(seed, "video", &video_id);
    let game = r.random_bool(0.15);
    let (source, view, fps, minutes) = if game {
        (Source::Game, ViewKind::Walking, 60.0, r.random_range(20..45))
    } else if r.random_bool(0.2) {
        (Source::Real, ViewKind::Drone, 30.0, r.random_range(20..60))
    } else {
        let fps = if r.random_bool(0.3) { 25.0 } else { 30.0 };
        (Source::Real, ViewKind::Walking, fps, r.random_range(30..120))
    };
    VideoRecord {
        video_id,
        source,
        view,
        duration_s: Millis::from_secs(minutes * 60 + r.random_range(0..60)),
        fps,
        width: 1920,
        height: 1080,
        title: format!("synthetic {} tour {index}", if game { "game" } else { "city" }),
        description: String::new(),
        chapters: vec![],
    }
}

/// Video-only manifest whose videos segment into at least `min_clips` clips
/// under `seg` with this provider's transitions. Returns the manifest and
/// the exact clip count.
pub fn input_manifest(seed: u64, min_clips: usize, seg: &SegmentConfig) -> (Manifest, usize) {
    let mut m = Manifest::new();
    let mut clips = 0;
    let mut i = 0;
    while clips < min_clips {
        let v = video(seed, i);
        clips += segment_video(&v, &transitions(seed, &v), seg).map(|c| c.len()).unwrap_or(0);
        m.insert_video(v).expect("unique ids");
        i += 1;
    }
    (m, clips)
}
