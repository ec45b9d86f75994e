//! Corpus data model and the line-oriented manifest encoding.
//!
//! A manifest file is UTF-8 JSON Lines. The first line is the schema header
//! `{"schema":"clipcurate/manifest","version":1}`; every following line is one
//! record tagged with `"kind": "video"` or `"kind": "clip"`. Records are
//! written videos first, then clips, each sorted by key, so saving is
//! byte-deterministic regardless of insertion order.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::labels::CategoryLabels;
use crate::time::{Millis, Span};

pub const SCHEMA: &str = "clipcurate/manifest";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Real,
    Game,
}

/// Capture style of a source video.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    #[default]
    Walking,
    Drone,
}

impl ViewKind {
    fn is_walking(&self) -> bool {
        *self == ViewKind::Walking
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub country_code: String,
    pub city: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place: Option<String>,
}

impl Location {
    pub fn new(country_code: &str, city: &str) -> Self {
        Location {
            country_code: country_code.to_string(),
            city: city.to_string(),
            place: None,
        }
    }

    /// ISO 3166 alpha-2 shape check: exactly two ASCII uppercase letters.
    pub fn has_valid_country_code(&self) -> bool {
        let b = self.country_code.as_bytes();
        b.len() == 2 && b.iter().all(u8::is_ascii_uppercase)
    }

    /// Grouping key for per-city statistics. City names repeat across countries.
    pub fn city_key(&self) -> String {
        format!("{}/{}", self.country_code, self.city)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.place {
            Some(p) => write!(f, "{}, {}, {}", p, self.city, self.country_code),
            None => write!(f, "{}, {}", self.city, self.country_code),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chapter {
    pub start_s: Millis,
    pub end_s: Millis,
    pub location: Location,
}

impl Chapter {
    pub fn span(&self) -> Span {
        Span::new(self.start_s, self.end_s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "ViewKind::is_walking")]
    pub view: ViewKind,
    pub duration_s: Millis,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub chapters: Vec<Chapter>,
}

impl VideoRecord {
    pub fn span(&self) -> Span {
        Span::new(Millis::ZERO, self.duration_s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub technical: f64,
    pub aesthetic: f64,
    pub semantic: f64,
}

impl QualityScores {
    /// Ranking score used by every sampling stage.
    pub fn sampling_score(&self) -> f64 {
        self.aesthetic + self.semantic
    }

    pub fn overall(&self) -> f64 {
        (self.technical + self.aesthetic + self.semantic) / 3.0
    }

    pub fn in_unit_range(&self) -> bool {
        [self.technical, self.aesthetic, self.semantic]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    Luma,
    Quality,
    Subtitle,
    Trajectory,
    LocationAmbiguous,
    Dedup,
    Sampler,
}

impl RemovalReason {
    pub const ALL: [RemovalReason; 7] = [
        RemovalReason::Luma,
        RemovalReason::Quality,
        RemovalReason::Subtitle,
        RemovalReason::Trajectory,
        RemovalReason::LocationAmbiguous,
        RemovalReason::Dedup,
        RemovalReason::Sampler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RemovalReason::Luma => "luma",
            RemovalReason::Quality => "quality",
            RemovalReason::Subtitle => "subtitle",
            RemovalReason::Trajectory => "trajectory",
            RemovalReason::LocationAmbiguous => "location_ambiguous",
            RemovalReason::Dedup => "dedup",
            RemovalReason::Sampler => "sampler",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipStatus {
    Active,
    Removed(RemovalReason),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub clip_id: String,
    pub video_id: String,
    pub start_s: Millis,
    pub end_s: Millis,
    pub status: ClipStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<CategoryLabels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<QualityScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_ref: Option<String>,
}

impl ClipRecord {
    pub fn new(clip_id: String, video_id: String, span: Span) -> Self {
        ClipRecord {
            clip_id,
            video_id,
            start_s: span.start,
            end_s: span.end,
            status: ClipStatus::Active,
            location: None,
            categories: None,
            caption: None,
            scores: None,
            trajectory_ref: None,
            embedding_ref: None,
        }
    }

    pub fn span(&self) -> Span {
        Span::new(self.start_s, self.end_s)
    }

    pub fn is_active(&self) -> bool {
        self.status == ClipStatus::Active
    }

    /// Marks the clip removed. The first removal reason sticks; returns
    /// `false` when the clip was already removed.
    pub fn remove(&mut self, reason: RemovalReason) -> bool {
        match self.status {
            ClipStatus::Active => {
                self.status = ClipStatus::Removed(reason);
                true
            }
            ClipStatus::Removed(_) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Video(VideoRecord),
    Clip(ClipRecord),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema: String,
    version: u32,
}

/// Checks applied to records on load.
#[derive(Clone, Copy, Debug)]
pub struct ValidationRules {
    /// Required duration of clips cut from real-source videos.
    pub real_clip_len: Option<Millis>,
}

impl Default for ValidationRules {
    fn default() -> Self {
        ValidationRules {
            real_clip_len: Some(Millis::from_secs(60)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Malformed,
    Duplicate,
    Invariant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based line number; 0 for checks made on an in-memory manifest.
    pub line: usize,
    pub kind: DiagnosticKind,
    pub record: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        if let Some(r) = &self.record {
            write!(f, "{r}: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("cannot write manifest {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error("missing or unsupported manifest header: {0}")]
    Header(String),
    #[error("manifest has {} invalid record(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),
    #[error("duplicate {kind} id {id}")]
    Duplicate { kind: &'static str, id: String },
}

/// A validated set of records keyed by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    videos: BTreeMap<String, VideoRecord>,
    clips: BTreeMap<String, ClipRecord>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty() && self.clips.is_empty()
    }

    pub fn insert_video(&mut self, video: VideoRecord) -> Result<(), ManifestError> {
        if self.videos.contains_key(&video.video_id) {
            return Err(ManifestError::Duplicate {
                kind: "video",
                id: video.video_id,
            });
        }
        self.videos.insert(video.video_id.clone(), video);
        Ok(())
    }

    pub fn insert_clip(&mut self, clip: ClipRecord) -> Result<(), ManifestError> {
        if self.clips.contains_key(&clip.clip_id) {
            return Err(ManifestError::Duplicate {
                kind: "clip",
                id: clip.clip_id,
            });
        }
        self.clips.insert(clip.clip_id.clone(), clip);
        Ok(())
    }

    pub fn video(&self, id: &str) -> Option<&VideoRecord> {
        self.videos.get(id)
    }

    pub fn clip(&self, id: &str) -> Option<&ClipRecord> {
        self.clips.get(id)
    }

    pub fn clip_mut(&mut self, id: &str) -> Option<&mut ClipRecord> {
        self.clips.get_mut(id)
    }

    pub fn videos(&self) -> impl Iterator<Item = &VideoRecord> {
        self.videos.values()
    }

    pub fn videos_mut(&mut self) -> impl Iterator<Item = &mut VideoRecord> {
        self.videos.values_mut()
    }

    pub fn clips(&self) -> impl Iterator<Item = &ClipRecord> {
        self.clips.values()
    }

    pub fn clips_mut(&mut self) -> impl Iterator<Item = &mut ClipRecord> {
        self.clips.values_mut()
    }

    pub fn active_clips(&self) -> impl Iterator<Item = &ClipRecord> {
        self.clips.values().filter(|c| c.is_active())
    }

    pub fn video_count(&self) -> usize {
        self.videos.len()
    }

    pub fn clip_count(&self) -> usize {
        self.clips.len()
    }

    pub fn remove_clips_where(&mut self, mut pred: impl FnMut(&ClipRecord) -> bool) {
        self.clips.retain(|_, c| !pred(c));
    }

    /// Records in canonical order: videos by id, then clips by id.
    pub fn records(&self) -> impl Iterator<Item = RecordRef<'_>> {
        self.videos
            .values()
            .map(RecordRef::Video)
            .chain(self.clips.values().map(RecordRef::Clip))
    }

    /// Re-checks every record invariant against the current contents.
    pub fn validate(&self, rules: &ValidationRules) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for v in self.videos.values() {
            out.extend(video_problems(v).into_iter().map(|m| Diagnostic {
                line: 0,
                kind: DiagnosticKind::Invariant,
                record: Some(v.video_id.clone()),
                message: m,
            }));
        }
        for c in self.clips.values() {
            let parent = self.videos.get(&c.video_id);
            out.extend(clip_problems(c, parent, rules).into_iter().map(|m| Diagnostic {
                line: 0,
                kind: DiagnosticKind::Invariant,
                record: Some(c.clip_id.clone()),
                message: m,
            }));
        }
        out
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordRef<'a> {
    Video(&'a VideoRecord),
    Clip(&'a ClipRecord),
}

fn video_problems(v: &VideoRecord) -> Vec<String> {
    let mut p = Vec::new();
    if v.video_id.is_empty() {
        p.push("empty video_id".to_string());
    }
    if v.duration_s < Millis::ZERO {
        p.push(format!("negative duration {}", v.duration_s));
    }
    if !(v.fps.is_finite() && v.fps > 0.0) {
        p.push(format!("fps must be positive, got {}", v.fps));
    }
    for (i, ch) in v.chapters.iter().enumerate() {
        if ch.start_s >= ch.end_s {
            p.push(format!("chapter {i} {} has start >= end", ch.span()));
        }
        if ch.start_s < Millis::ZERO || ch.end_s > v.duration_s {
            p.push(format!(
                "chapter {i} {} lies outside the video [0, {})",
                ch.span(),
                v.duration_s
            ));
        }
        if !ch.location.has_valid_country_code() {
            p.push(format!(
                "chapter {i} has invalid country code {:?}",
                ch.location.country_code
            ));
        }
    }
    for (i, pair) in v.chapters.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if b.start_s < a.start_s {
            p.push(format!(
                "chapters {i} {} and {} {} are not sorted by start",
                a.span(),
                i + 1,
                b.span()
            ));
        } else if a.span().overlaps(&b.span()) {
            p.push(format!(
                "chapters {i} {} and {} {} overlap",
                a.span(),
                i + 1,
                b.span()
            ));
        }
    }
    p
}

fn clip_problems(c: &ClipRecord, parent: Option<&VideoRecord>, rules: &ValidationRules) -> Vec<String> {
    let mut p = Vec::new();
    if c.clip_id.is_empty() {
        p.push("empty clip_id".to_string());
    }
    if c.start_s >= c.end_s {
        p.push(format!("interval {} is empty", c.span()));
    }
    if let Some(s) = &c.scores {
        if !s.in_unit_range() {
            p.push(format!("quality scores outside [0,1]: {s:?}"));
        }
    }
    if let Some(loc) = &c.location {
        if !loc.has_valid_country_code() {
            p.push(format!("invalid country code {:?}", loc.country_code));
        }
    }
    match parent {
        None => p.push(format!("parent video {} not in manifest", c.video_id)),
        Some(v) => {
            if !v.span().contains_span(&c.span()) {
                p.push(format!(
                    "interval {} outside parent video [0, {})",
                    c.span(),
                    v.duration_s
                ));
            }
            if let (Source::Real, Some(len)) = (v.source, rules.real_clip_len) {
                if c.span().len() != len {
                    p.push(format!("clip length {} differs from required {}", c.span().len(), len));
                }
            }
        }
    }
    p
}

/// Result of reading a manifest: the valid records plus one diagnostic per
/// rejected line.
#[derive(Debug, Default)]
pub struct LoadReport {
    pub manifest: Manifest,
    pub diagnostics: Vec<Diagnostic>,
}

impl LoadReport {
    /// Fails if any line was rejected.
    pub fn into_strict(self) -> Result<Manifest, ManifestError> {
        if self.diagnostics.is_empty() {
            Ok(self.manifest)
        } else {
            Err(ManifestError::Invalid(self.diagnostics))
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<LoadReport, ManifestError> {
    load_manifest_with(path, &ValidationRules::default())
}

pub fn load_manifest_with(path: &Path, rules: &ValidationRules) -> Result<LoadReport, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_manifest(&text, rules)
}

pub fn parse_manifest(text: &str, rules: &ValidationRules) -> Result<LoadReport, ManifestError> {
    let mut report = LoadReport::default();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = lines.next() else {
        return Ok(report);
    };
    let header: Header =
        serde_json::from_str(first).map_err(|e| ManifestError::Header(e.to_string()))?;
    if header.schema != SCHEMA || header.version != SCHEMA_VERSION {
        return Err(ManifestError::Header(format!(
            "expected {SCHEMA} v{SCHEMA_VERSION}, found {} v{}",
            header.schema, header.version
        )));
    }

    let mut clips = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let diag = |kind, record: Option<&str>, message: String| Diagnostic {
            line: line_no,
            kind,
            record: record.map(str::to_string),
            message,
        };
        match serde_json::from_str::<Record>(line) {
            Err(e) => report
                .diagnostics
                .push(diag(DiagnosticKind::Malformed, None, e.to_string())),
            Ok(Record::Video(v)) => {
                let problems = video_problems(&v);
                if !problems.is_empty() {
                    report.diagnostics.push(diag(
                        DiagnosticKind::Invariant,
                        Some(&v.video_id),
                        problems.join("; "),
                    ));
                } else if let Err(e) = report.manifest.insert_video(v) {
                    let id = match &e {
                        ManifestError::Duplicate { id, .. } => id.clone(),
                        _ => unreachable!(),
                    };
                    report
                        .diagnostics
                        .push(diag(DiagnosticKind::Duplicate, Some(&id), e.to_string()));
                }
            }
            // Clips are checked once every video is known.
            Ok(Record::Clip(c)) => clips.push((line_no, c)),
        }
    }

    for (line_no, c) in clips {
        let problems = clip_problems(&c, report.manifest.video(&c.video_id), rules);
        let id = c.clip_id.clone();
        let result = if problems.is_empty() {
            report.manifest.insert_clip(c).map_err(|e| (DiagnosticKind::Duplicate, e.to_string()))
        } else {
            Err((DiagnosticKind::Invariant, problems.join("; ")))
        };
        if let Err((kind, message)) = result {
            report.diagnostics.push(Diagnostic {
                line: line_no,
                kind,
                record: Some(id),
                message,
            });
        }
    }
    report.diagnostics.sort_by_key(|d| d.line);
    Ok(report)
}

pub fn write_manifest<W: Write>(manifest: &Manifest, out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    serde_json::to_writer(
        &mut out,
        &Header {
            schema: SCHEMA.to_string(),
            version: SCHEMA_VERSION,
        },
    )?;
    out.write_all(b"\n")?;
    for record in manifest.records() {
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn manifest_to_bytes(manifest: &Manifest) -> Vec<u8> {
    let mut buf = Vec::new();
    write_manifest(manifest, &mut buf).expect("writing to memory");
    buf
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn save_manifest(manifest: &Manifest, path: &Path) -> Result<(), ManifestError> {
    write_atomic(path, &manifest_to_bytes(manifest)).map_err(|source| ManifestError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(id: &str, chapters: Vec<Chapter>) -> VideoRecord {
        VideoRecord {
            video_id: id.into(),
            source: Source::Real,
            view: ViewKind::Walking,
            duration_s: Millis::from_secs(3600),
            fps: 30.0,
            width: 1920,
            height: 1080,
            title: "walk".into(),
            description: String::new(),
            chapters,
        }
    }

    fn chapter(a: i64, b: i64, city: &str) -> Chapter {
        Chapter {
            start_s: Millis::from_secs(a),
            end_s: Millis::from_secs(b),
            location: Location::new("JP", city),
        }
    }

    fn header() -> String {
        format!("{{\"schema\":\"{SCHEMA}\",\"version\":1}}\n")
    }

    #[test]
    fn empty_file_is_empty_manifest() {
        let r = parse_manifest("", &ValidationRules::default()).unwrap();
        assert!(r.manifest.is_empty());
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn single_video_line() {
        let mut m = Manifest::new();
        m.insert_video(video("v1", vec![chapter(0, 600, "Tokyo")])).unwrap();
        let text = String::from_utf8(manifest_to_bytes(&m)).unwrap();
        assert_eq!(text.lines().count(), 2);
        let r = parse_manifest(&text, &ValidationRules::default()).unwrap();
        assert_eq!(r.manifest, m);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn overlapping_chapters_name_record_and_both_chapters() {
        let v = video("v9", vec![chapter(0, 600, "Tokyo"), chapter(500, 900, "Osaka")]);
        let line = serde_json::to_string(&Record::Video(v)).unwrap();
        let text = format!("{}{}\n", header(), line);
        let r = parse_manifest(&text, &ValidationRules::default()).unwrap();
        assert!(r.manifest.is_empty());
        assert_eq!(r.diagnostics.len(), 1);
        let d = &r.diagnostics[0];
        assert_eq!(d.line, 2);
        assert_eq!(d.kind, DiagnosticKind::Invariant);
        assert_eq!(d.record.as_deref(), Some("v9"));
        assert!(d.message.contains("[0.000s, 600.000s)"), "{}", d.message);
        assert!(d.message.contains("[500.000s, 900.000s)"), "{}", d.message);
    }

    #[test]
    fn malformed_and_duplicate_lines_are_reported_with_line_numbers() {
        let v = serde_json::to_string(&Record::Video(video("v1", vec![]))).unwrap();
        let text = format!("{}{v}\nnot json\n{v}\n", header());
        let r = parse_manifest(&text, &ValidationRules::default()).unwrap();
        assert_eq!(r.manifest.video_count(), 1);
        let kinds: Vec<_> = r.diagnostics.iter().map(|d| (d.line, d.kind)).collect();
        assert_eq!(
            kinds,
            vec![(3, DiagnosticKind::Malformed), (4, DiagnosticKind::Duplicate)]
        );
    }

    #[test]
    fn clip_outside_parent_or_wrong_length_is_rejected() {
        let mut m = Manifest::new();
        m.insert_video(video("v1", vec![])).unwrap();
        let mut c = ClipRecord::new(
            "v1-a".into(),
            "v1".into(),
            Span::new(Millis::from_secs(3590), Millis::from_secs(3650)),
        );
        let mut text = String::from_utf8(manifest_to_bytes(&m)).unwrap();
        text.push_str(&serde_json::to_string(&Record::Clip(c.clone())).unwrap());
        text.push('\n');
        c.clip_id = "v1-b".into();
        c.start_s = Millis::from_secs(10);
        c.end_s = Millis::from_secs(50);
        text.push_str(&serde_json::to_string(&Record::Clip(c)).unwrap());
        let r = parse_manifest(&text, &ValidationRules::default()).unwrap();
        assert_eq!(r.manifest.clip_count(), 0);
        assert_eq!(r.diagnostics.len(), 2);
        assert!(r.diagnostics[0].message.contains("outside parent"));
        assert!(r.diagnostics[1].message.contains("clip length"));
    }

    #[test]
    fn unknown_header_is_an_error() {
        let err = parse_manifest("{\"schema\":\"other\",\"version\":1}\n", &ValidationRules::default());
        assert!(matches!(err, Err(ManifestError::Header(_))));
    }

    #[test]
    fn removal_reason_is_sticky() {
        let mut c = ClipRecord::new("c".into(), "v".into(), Span::new(Millis(0), Millis(60_000)));
        assert!(c.remove(RemovalReason::Luma));
        assert!(!c.remove(RemovalReason::Sampler));
        assert_eq!(c.status, ClipStatus::Removed(RemovalReason::Luma));
    }

    #[test]
    fn status_wire_format() {
        let s = serde_json::to_string(&ClipStatus::Removed(RemovalReason::LocationAmbiguous)).unwrap();
        assert_eq!(s, r#"{"removed":"location_ambiguous"}"#);
        assert_eq!(serde_json::to_string(&ClipStatus::Active).unwrap(), r#""active""#);
    }
}
