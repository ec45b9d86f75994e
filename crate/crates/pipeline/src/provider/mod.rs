//! Annotation providers.
//!
//! A [`Backend`] answers `(kind, reference)` requests with a raw payload;
//! [`Providers`] decodes and validates it against the matching core type
//! and optionally caches raw responses on disk.

pub mod fixture;
pub mod remote;
pub mod synthetic;

use std::fmt;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use clipcurate_core::filter::SubtitleEvent;
use clipcurate_core::labels::{CategoryLabels, Vocabulary, VocabularyError};
use clipcurate_core::location::parse_chapters;
use clipcurate_core::manifest::{write_atomic, Chapter, ClipRecord, Manifest, QualityScores, ValidationRules, VideoRecord};
use clipcurate_core::segment::{check_series, expected_frames, TransitionSeries};
use clipcurate_core::trajectory::CameraTrajectory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{PipelineConfig, ProviderMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Transition,
    Luma,
    Subtitle,
    Quality,
    Embedding,
    Pose,
    Category,
    Caption,
    Chapters,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Transition,
        Kind::Luma,
        Kind::Subtitle,
        Kind::Quality,
        Kind::Embedding,
        Kind::Pose,
        Kind::Category,
        Kind::Caption,
        Kind::Chapters,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Transition => "transition",
            Kind::Luma => "luma",
            Kind::Subtitle => "subtitle",
            Kind::Quality => "quality",
            Kind::Embedding => "embedding",
            Kind::Pose => "pose",
            Kind::Category => "category",
            Kind::Caption => "caption",
            Kind::Chapters => "chapters",
        }
    }

    /// Payloads carried as plain text rather than JSON.
    pub fn is_text(self) -> bool {
        matches!(self, Kind::Pose | Kind::Chapters)
    }

    /// Kinds whose reference is a video id; the rest take clip ids.
    pub fn per_video(self) -> bool {
        matches!(self, Kind::Transition | Kind::Chapters)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a request is about.
#[derive(Clone, Copy, Debug)]
pub enum Subject<'a> {
    Video(&'a VideoRecord),
    Clip { clip: &'a ClipRecord, video: &'a VideoRecord },
}

impl<'a> Subject<'a> {
    pub fn reference(&self) -> &'a str {
        match self {
            Subject::Video(v) => &v.video_id,
            Subject::Clip { clip, .. } => &clip.clip_id,
        }
    }

    pub fn video(&self) -> &'a VideoRecord {
        match self {
            Subject::Video(v) => v,
            Subject::Clip { video, .. } => video,
        }
    }

    /// Metadata sent along with remote requests.
    pub fn context(&self) -> serde_json::Value {
        let v = self.video();
        let mut ctx = serde_json::json!({
            "video_id": v.video_id,
            "source": v.source,
            "view": v.view,
            "duration_s": v.duration_s,
            "fps": v.fps,
        });
        if let Subject::Clip { clip, .. } = self {
            ctx["clip_id"] = serde_json::json!(clip.clip_id);
            ctx["start_s"] = serde_json::json!(clip.start_s);
            ctx["end_s"] = serde_json::json!(clip.end_s);
        }
        ctx
    }
}

/// Decoded payloads.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Transition(TransitionSeries),
    Luma(Vec<f32>),
    Subtitle(Vec<SubtitleEvent>),
    Quality(QualityScores),
    Embedding(Vec<f32>),
    Pose(CameraTrajectory),
    Category(CategoryLabels),
    Caption(String),
    Chapters(Vec<Chapter>),
}

impl Payload {
    pub fn kind(&self) -> Kind {
        match self {
            Payload::Transition(_) => Kind::Transition,
            Payload::Luma(_) => Kind::Luma,
            Payload::Subtitle(_) => Kind::Subtitle,
            Payload::Quality(_) => Kind::Quality,
            Payload::Embedding(_) => Kind::Embedding,
            Payload::Pose(_) => Kind::Pose,
            Payload::Category(_) => Kind::Category,
            Payload::Caption(_) => Kind::Caption,
            Payload::Chapters(_) => Kind::Chapters,
        }
    }
}

/// A backend response: wire bytes (JSON, or UTF-8 text for text kinds) or
/// an already decoded value.
#[derive(Clone, Debug)]
pub enum Raw {
    Bytes(Vec<u8>),
    Typed(Payload),
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("no provider configured; {kind} payload for {reference} is needed")]
    NotConfigured { kind: Kind, reference: String },
    #[error("{kind} payload for {reference} not found: {detail}")]
    Missing { kind: Kind, reference: String, detail: String },
    #[error("{kind} request for {reference} failed after {attempts} attempt(s): {message}")]
    Transport { kind: Kind, reference: String, attempts: u32, message: String },
    #[error("{kind} request for {reference} rejected with HTTP {status}: {body}")]
    Rejected { kind: Kind, reference: String, status: u16, body: String },
    #[error("schema error in {kind} payload for {reference}: {message}")]
    Schema { kind: Kind, reference: String, message: String },
    #[error("category payload for {reference}: {source}")]
    Vocabulary {
        reference: String,
        #[source]
        source: VocabularyError,
    },
    #[error("provider cache {path}: {message}")]
    Cache { path: String, message: String },
    #[error("provider setup: {0}")]
    Setup(String),
}

pub trait Backend: Send + Sync {
    /// Changes whenever the backend could answer some request differently.
    fn identity(&self) -> String;
    fn fetch(&self, kind: Kind, subject: &Subject<'_>) -> Result<Raw, ProviderError>;
}

/// Backend used when no provider is configured.
pub struct NoBackend;

impl Backend for NoBackend {
    fn identity(&self) -> String {
        "none".into()
    }

    fn fetch(&self, kind: Kind, subject: &Subject<'_>) -> Result<Raw, ProviderError> {
        Err(ProviderError::NotConfigured { kind, reference: subject.reference().to_string() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
    /// Caching disabled or the response is not cacheable.
    Bypass,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CacheCounts {
    pub hits: u64,
    pub misses: u64,
}

/// Typed, validating front end over a backend.
pub struct Providers {
    backend: Box<dyn Backend>,
    identity: String,
    vocabulary: Vocabulary,
    cache_dir: Option<PathBuf>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl Providers {
    pub fn new(backend: Box<dyn Backend>, vocabulary: Vocabulary) -> Self {
        let identity = backend.identity();
        Providers { backend, identity, vocabulary, cache_dir: None, hits: AtomicU64::new(0), misses: AtomicU64::new(0) }
    }

    pub fn with_cache(mut self, dir: PathBuf) -> Self {
        self.cache_dir = Some(dir);
        self
    }

    /// Builds the backend the configuration asks for.
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self, ProviderError> {
        let p = &cfg.provider;
        let backend: Box<dyn Backend> = match p.mode {
            ProviderMode::None => Box::new(NoBackend),
            ProviderMode::Fixture => {
                let dir = p.fixture_dir.clone().ok_or_else(|| ProviderError::Setup("fixture_dir is not set".into()))?;
                Box::new(fixture::FixtureBackend::open(&dir)?)
            }
            ProviderMode::Remote => Box::new(remote::RemoteBackend::from_config(p)?),
            ProviderMode::Synthetic => {
                Box::new(synthetic::SyntheticBackend::new(p.synthetic.clone(), cfg.vocabulary.clone()))
            }
        };
        let providers = Providers::new(backend, cfg.vocabulary.clone());
        Ok(if p.cache { providers.with_cache(cfg.workspace.join("cache")) } else { providers })
    }

    pub fn identity(&self) -> &str {
        &self.identity
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn cache_counts(&self) -> CacheCounts {
        CacheCounts { hits: self.hits.load(Ordering::Relaxed), misses: self.misses.load(Ordering::Relaxed) }
    }

    fn cache_path(&self, kind: Kind, reference: &str) -> Option<PathBuf> {
        let dir = self.cache_dir.as_ref()?;
        let mut h = Sha256::new();
        for part in [self.identity.as_str(), kind.name(), reference] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        Some(dir.join(kind.name()).join(hex::encode(h.finalize())))
    }

    /// Backend response, through the cache when one is configured.
    pub fn fetch_raw(&self, kind: Kind, subject: &Subject<'_>) -> Result<(Raw, CacheStatus), ProviderError> {
        let path = self.cache_path(kind, subject.reference());
        if let Some(p) = &path {
            if let Ok(bytes) = std::fs::read(p) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok((Raw::Bytes(bytes), CacheStatus::Hit));
            }
        }
        let raw = self.backend.fetch(kind, subject)?;
        match (&raw, path) {
            (Raw::Bytes(bytes), Some(p)) => {
                write_atomic(&p, bytes).map_err(|e| ProviderError::Cache {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
                self.misses.fetch_add(1, Ordering::Relaxed);
                Ok((raw, CacheStatus::Miss))
            }
            _ => Ok((raw, CacheStatus::Bypass)),
        }
    }

    /// Fetches, decodes and validates one payload.
    pub fn fetch(&self, kind: Kind, subject: &Subject<'_>) -> Result<Payload, ProviderError> {
        let (raw, _) = self.fetch_raw(kind, subject)?;
        let payload = match raw {
            Raw::Bytes(b) => decode(kind, subject.reference(), &b)?,
            Raw::Typed(p) => p,
        };
        if payload.kind() != kind {
            return Err(schema(kind, subject.reference(), format!("backend answered with a {} payload", payload.kind())));
        }
        self.validate(&payload, subject)?;
        Ok(payload)
    }

    fn validate(&self, payload: &Payload, subject: &Subject<'_>) -> Result<(), ProviderError> {
        let reference = subject.reference();
        let bad = |kind: Kind, message: String| Err(schema(kind, reference, message));
        match (payload, subject) {
            (Payload::Transition(s), Subject::Video(v)) => {
                check_series(v, s).map_err(|e| schema(Kind::Transition, reference, e.to_string()))
            }
            (Payload::Chapters(ch), Subject::Video(v)) => {
                let mut m = Manifest::new();
                let mut probe = (*v).clone();
                probe.chapters = ch.clone();
                m.insert_video(probe).expect("single video");
                match m.validate(&ValidationRules { real_clip_len: None }).first() {
                    Some(d) => bad(Kind::Chapters, d.message.clone()),
                    None => Ok(()),
                }
            }
            (Payload::Luma(l), Subject::Clip { clip, video }) => {
                let expected = expected_frames(clip.span().len(), video.fps);
                if l.len().abs_diff(expected) > 1 {
                    return bad(Kind::Luma, format!("{} frames, expected {expected} (±1)", l.len()));
                }
                match l.iter().position(|v| !(0.0..=255.0).contains(v)) {
                    Some(i) => bad(Kind::Luma, format!("frame {i} has luma {}, outside [0, 255]", l[i])),
                    None => Ok(()),
                }
            }
            (Payload::Subtitle(events), Subject::Clip { clip, .. }) => {
                let len = clip.span().len().as_secs_f64();
                for (i, e) in events.iter().enumerate() {
                    if !(0.0..=1.0).contains(&e.y_center_frac) {
                        return bad(Kind::Subtitle, format!("event {i} has y_center_frac {} outside [0, 1]", e.y_center_frac));
                    }
                    if !(e.start_s >= 0.0 && e.start_s < e.end_s && e.end_s <= len + 1e-9) {
                        return bad(Kind::Subtitle, format!("event {i} [{}, {}] is not an interval within [0, {len}]", e.start_s, e.end_s));
                    }
                }
                Ok(())
            }
            (Payload::Quality(q), Subject::Clip { .. }) => {
                if q.in_unit_range() {
                    Ok(())
                } else {
                    bad(Kind::Quality, format!("scores {q:?} outside [0, 1]"))
                }
            }
            (Payload::Embedding(e), Subject::Clip { .. }) => {
                if e.is_empty() {
                    bad(Kind::Embedding, "empty vector".into())
                } else if e.iter().any(|v| !v.is_finite()) {
                    bad(Kind::Embedding, "non-finite entries".into())
                } else {
                    Ok(())
                }
            }
            (Payload::Category(c), Subject::Clip { .. }) => self
                .vocabulary
                .check(c)
                .map_err(|source| ProviderError::Vocabulary { reference: reference.to_string(), source }),
            (Payload::Pose(_) | Payload::Caption(_), Subject::Clip { .. }) => Ok(()),
            (p, _) => bad(p.kind(), "payload kind does not match the request subject".into()),
        }
    }

    pub fn transition(&self, video: &VideoRecord) -> Result<TransitionSeries, ProviderError> {
        match self.fetch(Kind::Transition, &Subject::Video(video))? {
            Payload::Transition(s) => Ok(s),
            _ => unreachable!("kind checked in fetch"),
        }
    }

    pub fn chapters(&self, video: &VideoRecord) -> Result<Vec<Chapter>, ProviderError> {
        match self.fetch(Kind::Chapters, &Subject::Video(video))? {
            Payload::Chapters(c) => Ok(c),
            _ => unreachable!("kind checked in fetch"),
        }
    }

    pub fn luma(&self, clip: &ClipRecord, video: &VideoRecord) -> Result<Vec<f32>, ProviderError> {
        match self.fetch(Kind::Luma, &Subject::Clip { clip, video })? {
            Payload::Luma(l) => Ok(l),
            _ => unreachable!("kind checked in fetch"),
        }
    }

    pub fn subtitles(&self, clip: &ClipRecord, video: &VideoRecord) -> Result<Vec<SubtitleEvent>, ProviderError> {
        match self.fetch(Kind::Subtitle, &Subject::Clip { clip, video })? {
            Payload::Subtitle(s) => Ok(s),
            _ => unreachable!("kind checked in fetch"),
        }
    }

    pub fn quality(&self, clip: &ClipRecord, video: &VideoRecord) -> Result<QualityScores, ProviderError> {
        match self.fetch(Kind::Quality, &Subject::Clip { clip, video })? {
            Payload::Quality(q) => Ok(q),
            _ => unreachable!("kind checked in fetch"),
        }
    }

    pub fn embedding(&self, clip: &ClipRecord, video: &VideoRecord) -> Result<Vec<f32>, ProviderError> {
        match self.fetch(Kind::Embedding, &Subject::Clip { clip, video })? {
            Payload::Embedding(e) => Ok(e),
            _ => unreachable!("kind checked in fetch"),
        }
    }

    pub fn pose(&self, clip: &ClipRecord, video: &VideoRecord) -> Result<CameraTrajectory, ProviderError> {
        match self.fetch(Kind::Pose, &Subject::Clip { clip, video })? {
            Payload::Pose(t) => Ok(t),
            _ => unreachable!("kind checked in fetch"),
        }
    }

    pub fn category(&self, clip: &ClipRecord, video: &VideoRecord) -> Result<CategoryLabels, ProviderError> {
        match self.fetch(Kind::Category, &Subject::Clip { clip, video })? {
            Payload::Category(c) => Ok(c),
            _ => unreachable!("kind checked in fetch"),
        }
    }

    pub fn caption(&self, clip: &ClipRecord, video: &VideoRecord) -> Result<String, ProviderError> {
        match self.fetch(Kind::Caption, &Subject::Clip { clip, video })? {
            Payload::Caption(c) => Ok(c),
            _ => unreachable!("kind checked in fetch"),
        }
    }
}

fn schema(kind: Kind, reference: &str, message: String) -> ProviderError {
    ProviderError::Schema { kind, reference: reference.to_string(), message }
}

/// Parses wire bytes of one kind.
pub fn decode(kind: Kind, reference: &str, bytes: &[u8]) -> Result<Payload, ProviderError> {
    let fail = |m: String| schema(kind, reference, m);
    macro_rules! parse {
        ($t:ty) => {
            serde_json::from_slice::<$t>(bytes).map_err(|e| fail(e.to_string()))?
        };
    }
    Ok(match kind {
        Kind::Transition => Payload::Transition(parse!(TransitionSeries)),
        Kind::Luma => Payload::Luma(parse!(Vec<f32>)),
        Kind::Subtitle => Payload::Subtitle(parse!(Vec<SubtitleEvent>)),
        Kind::Quality => Payload::Quality(parse!(QualityScores)),
        Kind::Embedding => Payload::Embedding(parse!(Vec<f32>)),
        Kind::Category => Payload::Category(parse!(CategoryLabels)),
        Kind::Caption => Payload::Caption(parse!(String)),
        Kind::Pose => {
            let text = std::str::from_utf8(bytes).map_err(|e| fail(e.to_string()))?;
            Payload::Pose(CameraTrajectory::parse_text(text).map_err(|e| fail(e.to_string()))?)
        }
        Kind::Chapters => {
            let text = std::str::from_utf8(bytes).map_err(|e| fail(e.to_string()))?;
            Payload::Chapters(parse_chapters(text).map_err(|e| fail(e.to_string()))?)
        }
    })
}

/// Wire bytes of a payload, the inverse of [`decode`].
pub fn encode(payload: &Payload) -> Vec<u8> {
    let to = |v: serde_json::Result<Vec<u8>>| v.expect("payload serializes");
    match payload {
        Payload::Transition(s) => to(serde_json::to_vec(s)),
        Payload::Luma(l) => to(serde_json::to_vec(l)),
        Payload::Subtitle(s) => to(serde_json::to_vec(s)),
        Payload::Quality(q) => to(serde_json::to_vec(q)),
        Payload::Embedding(e) => to(serde_json::to_vec(e)),
        Payload::Category(c) => to(serde_json::to_vec(c)),
        Payload::Caption(c) => to(serde_json::to_vec(c)),
        Payload::Pose(t) => t.to_text().into_bytes(),
        Payload::Chapters(c) => clipcurate_core::location::format_chapters(c).into_bytes(),
    }
}
