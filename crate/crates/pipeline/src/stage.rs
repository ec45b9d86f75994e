//! The six pipeline stages.
//!
//! Each stage reads the outputs of its input stages and returns its own
//! output files as bytes; the runner decides whether to run it and commits
//! the files. A disabled stage passes its manifest through unchanged.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clipcurate_core::filter::{
    apply_cascade, luminance_fails, subtitle_flagged, trajectory_verdict, ClipSignals, TrajectoryScope,
};
use clipcurate_core::location::{ChapterIndex, MatchOutcome};
use clipcurate_core::manifest::{
    load_manifest_with, manifest_to_bytes, parse_manifest, ClipRecord, Manifest, ManifestError, RemovalReason,
    ValidationRules, VideoRecord,
};
use clipcurate_core::par;
use clipcurate_core::sampling::{run_sampling, SamplingFailure, SamplingInputs};
use clipcurate_core::segment::{segment_video, SegmentError};
use clipcurate_core::stats::{build_report, report_json, report_tables};
use clipcurate_core::time::Millis;
use clipcurate_core::trajectory::{TrajectorySummary, JITTER_WINDOW};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::provider::{ProviderError, Providers};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageName {
    Collect,
    Segment,
    Filter,
    Annotate,
    Sample,
    Report,
}

impl StageName {
    pub const ORDER: [StageName; 6] = [
        StageName::Collect,
        StageName::Segment,
        StageName::Filter,
        StageName::Annotate,
        StageName::Sample,
        StageName::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StageName::Collect => "collect",
            StageName::Segment => "segment",
            StageName::Filter => "filter",
            StageName::Annotate => "annotate",
            StageName::Sample => "sample",
            StageName::Report => "report",
        }
    }

    /// Stages whose outputs this stage reads. The first one supplies the manifest.
    pub fn inputs(self) -> &'static [StageName] {
        match self {
            StageName::Collect => &[],
            StageName::Segment => &[StageName::Collect],
            StageName::Filter => &[StageName::Segment],
            StageName::Annotate => &[StageName::Filter],
            StageName::Sample => &[StageName::Annotate, StageName::Filter],
            StageName::Report => &[StageName::Sample],
        }
    }

    /// Whether the stage calls providers, so their identity enters its digest.
    pub fn uses_providers(self) -> bool {
        !matches!(self, StageName::Report)
    }
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StageName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "match-locations" | "match_locations" => return Ok(StageName::Annotate),
            _ => {}
        }
        StageName::ORDER
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}; expected one of collect, segment, filter, annotate, sample, report"))
    }
}

pub const MANIFEST: &str = "manifest.jsonl";
pub const SUMMARIES: &str = "summaries.jsonl";
pub const EMBEDDINGS: &str = "embeddings.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error("sampling failed after {} completed stage(s): {}", .0.partial.len(), .0.error)]
    Sampling(#[from] SamplingFailure),
    #[error("{path}: {message}")]
    Data { path: String, message: String },
}

pub type Files = Vec<(String, Vec<u8>)>;

/// What a stage sees when it runs.
pub struct StageContext<'a> {
    pub cfg: &'a PipelineConfig,
    pub providers: &'a Providers,
    /// Output directory of each input stage.
    pub input_dirs: HashMap<StageName, PathBuf>,
}

impl StageContext<'_> {
    fn dir(&self, stage: StageName) -> &Path {
        &self.input_dirs[&stage]
    }

    fn manifest_of(&self, stage: StageName) -> Result<Manifest, StageError> {
        let path = self.dir(stage).join(MANIFEST);
        let text = read_text(&path)?;
        Ok(parse_manifest(&text, &rules(self.cfg))?.into_strict()?)
    }

    fn read(&self, stage: StageName, file: &str) -> Result<String, StageError> {
        read_text(&self.dir(stage).join(file))
    }

    fn parallel<T, R, F>(&self, items: &[T], f: F) -> Result<Vec<R>, StageError>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Result<R, StageError> + Sync + Send,
    {
        par::with_threads(self.cfg.parallelism, || par::try_map(items, f))
    }
}

fn read_text(path: &Path) -> Result<String, StageError> {
    std::fs::read_to_string(path).map_err(|e| StageError::Data { path: path.display().to_string(), message: e.to_string() })
}

fn rules(cfg: &PipelineConfig) -> ValidationRules {
    ValidationRules { real_clip_len: Some(Millis::from_secs_f64(cfg.segment.clip_len_s)) }
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

/// One JSON document per line.
pub fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("serializable");
        out.push(b'\n');
    }
    out
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str, path: &str) -> Result<Vec<T>, StageError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StageError::Data { path: path.to_string(), message: format!("line {}: {e}", i + 1) })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingLine {
    pub clip_id: String,
    pub embedding: Vec<f32>,
}

pub fn run_stage(stage: StageName, ctx: &StageContext<'_>) -> Result<Files, StageError> {
    let enabled = ctx.cfg.stages.enabled(stage);
    match stage {
        StageName::Collect => collect(ctx, enabled),
        StageName::Segment => segment(ctx, enabled),
        StageName::Filter => filter(ctx, enabled),
        StageName::Annotate => annotate(ctx, enabled),
        StageName::Sample => sample(ctx, enabled),
        StageName::Report => report(ctx, enabled),
    }
}

fn collect(ctx: &StageContext<'_>, enabled: bool) -> Result<Files, StageError> {
    let mut m = match &ctx.cfg.input {
        Some(path) => load_manifest_with(path, &rules(ctx.cfg))?.into_strict()?,
        None => Manifest::new(),
    };
    let clips = m.clip_count();
    if clips > 0 {
        log::warn!("collect: ignoring {clips} clip record(s) in the input; clips are cut by the segment stage");
        m.remove_clips_where(|_| true);
    }
    if enabled {
        let missing: Vec<VideoRecord> = m.videos().filter(|v| v.chapters.is_empty()).cloned().collect();
        let chapters = ctx.parallel(&missing, |v| Ok(ctx.providers.chapters(v)?))?;
        let by_id: HashMap<&str, _> = missing.iter().map(|v| v.video_id.as_str()).zip(chapters).collect();
        for v in m.videos_mut() {
            if let Some(ch) = by_id.get(v.video_id.as_str()) {
                v.chapters = ch.clone();
            }
        }
    }
    Ok(vec![(MANIFEST.into(), manifest_to_bytes(&m))])
}

#[derive(Serialize)]
struct SegmentSummary {
    videos: usize,
    clips: usize,
    too_short: Vec<String>,
}

fn segment(ctx: &StageContext<'_>, enabled: bool) -> Result<Files, StageError> {
    let mut m = ctx.manifest_of(StageName::Collect)?;
    if !enabled {
        return Ok(vec![(MANIFEST.into(), manifest_to_bytes(&m)), ("segment.json".into(), json(&serde_json::json!({"enabled": false})))]);
    }
    let videos: Vec<VideoRecord> = m.videos().cloned().collect();
    let cut = ctx.parallel(&videos, |v| {
        let series = ctx.providers.transition(v)?;
        match segment_video(v, &series, &ctx.cfg.segment) {
            Ok(clips) => Ok(Ok(clips)),
            Err(SegmentError::TooShort { .. }) => Ok(Err(v.video_id.clone())),
            Err(e) => Err(e.into()),
        }
    })?;
    let mut summary = SegmentSummary { videos: videos.len(), clips: 0, too_short: vec![] };
    for result in cut {
        match result {
            Ok(clips) => {
                summary.clips += clips.len();
                for c in clips {
                    m.insert_clip(c)?;
                }
            }
            Err(id) => {
                log::warn!("segment: video {id} is too short for the head/tail trim");
                summary.too_short.push(id);
            }
        }
    }
    Ok(vec![(MANIFEST.into(), manifest_to_bytes(&m)), ("segment.json".into(), json(&summary))])
}

/// Active clips paired with their parent videos, in clip id order.
fn active_with_videos(m: &Manifest) -> Vec<(ClipRecord, VideoRecord)> {
    m.active_clips()
        .map(|c| (c.clone(), m.video(&c.video_id).expect("validated manifest").clone()))
        .collect()
}

fn filter(ctx: &StageContext<'_>, enabled: bool) -> Result<Files, StageError> {
    let mut m = ctx.manifest_of(StageName::Segment)?;
    if !enabled {
        return Ok(vec![
            (MANIFEST.into(), manifest_to_bytes(&m)),
            (SUMMARIES.into(), Vec::new()),
            ("filter.json".into(), json(&serde_json::json!({"enabled": false}))),
        ]);
    }
    let fc = &ctx.cfg.filter;
    let items = active_with_videos(&m);
    let results = ctx.parallel(&items, |(clip, video)| {
        let p = ctx.providers;
        let mut sig = ClipSignals::default();
        if fc.luma_applies_to(video.source) {
            sig.luma_failed = Some(luminance_fails(&p.luma(clip, video)?, fc));
        }
        sig.subtitle_flagged = Some(subtitle_flagged(&p.subtitles(clip, video)?, fc));
        let scores = p.quality(clip, video)?;
        let mut summary = None;
        if fc.trajectory_scope == TrajectoryScope::All || clip.trajectory_ref.is_some() {
            let traj = p.pose(clip, video)?;
            sig.trajectory = Some(trajectory_verdict(&traj, fc));
            summary = Some(TrajectorySummary::compute(&clip.clip_id, &traj, JITTER_WINDOW));
        }
        Ok((sig, scores, summary))
    })?;
    let mut signals = HashMap::with_capacity(items.len());
    let mut summaries = Vec::new();
    for ((clip, _), (sig, scores, summary)) in items.iter().zip(results) {
        m.clip_mut(&clip.clip_id).expect("clip exists").scores = Some(scores);
        signals.insert(clip.clip_id.clone(), sig);
        summaries.extend(summary);
    }
    let outcome = apply_cascade(&mut m, &signals, fc);
    Ok(vec![
        (MANIFEST.into(), manifest_to_bytes(&m)),
        (SUMMARIES.into(), jsonl(&summaries)),
        ("filter.json".into(), json(&outcome)),
    ])
}

#[derive(Serialize)]
struct MatchSummary {
    clips: usize,
    matched: usize,
    discarded: usize,
    discard_fraction: f64,
    /// Discarded clips by number of chapters containing them.
    by_containing: BTreeMap<usize, usize>,
}

fn annotate(ctx: &StageContext<'_>, enabled: bool) -> Result<Files, StageError> {
    let mut m = ctx.manifest_of(StageName::Filter)?;
    if !enabled {
        return Ok(vec![
            (MANIFEST.into(), manifest_to_bytes(&m)),
            (EMBEDDINGS.into(), Vec::new()),
            ("match.json".into(), json(&serde_json::json!({"enabled": false}))),
        ]);
    }
    let indexes: HashMap<String, ChapterIndex> =
        m.videos().map(|v| (v.video_id.clone(), ChapterIndex::build(v))).collect();
    let items = active_with_videos(&m);
    let results = ctx.parallel(&items, |(clip, video)| match indexes[&video.video_id].match_span(clip.span()) {
        MatchOutcome::Ambiguous { containing } => Ok(Err(containing)),
        MatchOutcome::Unique(loc) => {
            let p = ctx.providers;
            Ok(Ok((loc, p.category(clip, video)?, p.caption(clip, video)?, p.embedding(clip, video)?)))
        }
    })?;
    let mut summary = MatchSummary { clips: items.len(), matched: 0, discarded: 0, discard_fraction: 0.0, by_containing: BTreeMap::new() };
    let mut embeddings = Vec::new();
    for ((clip, _), r) in items.iter().zip(results) {
        let c = m.clip_mut(&clip.clip_id).expect("clip exists");
        match r {
            Err(containing) => {
                c.remove(RemovalReason::LocationAmbiguous);
                summary.discarded += 1;
                *summary.by_containing.entry(containing).or_default() += 1;
            }
            Ok((loc, labels, caption, embedding)) => {
                c.location = Some(loc);
                c.categories = Some(labels);
                c.caption = Some(caption);
                c.embedding_ref = Some(format!("{EMBEDDINGS}#{}", c.clip_id));
                summary.matched += 1;
                embeddings.push(EmbeddingLine { clip_id: clip.clip_id.clone(), embedding });
            }
        }
    }
    if summary.clips > 0 {
        summary.discard_fraction = summary.discarded as f64 / summary.clips as f64;
    }
    Ok(vec![
        (MANIFEST.into(), manifest_to_bytes(&m)),
        (EMBEDDINGS.into(), jsonl(&embeddings)),
        ("match.json".into(), json(&summary)),
    ])
}

fn load_summaries(ctx: &StageContext<'_>, stage: StageName) -> Result<HashMap<String, TrajectorySummary>, StageError> {
    let path = ctx.dir(stage).join(SUMMARIES);
    let rows: Vec<TrajectorySummary> = parse_jsonl(&ctx.read(stage, SUMMARIES)?, &path.display().to_string())?;
    Ok(rows.into_iter().map(|s| (s.clip_id.clone(), s)).collect())
}

fn sorted_summaries(map: &HashMap<String, TrajectorySummary>, m: &Manifest) -> Vec<TrajectorySummary> {
    let mut v: Vec<TrajectorySummary> = m.clips().filter_map(|c| map.get(&c.clip_id).cloned()).collect();
    v.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    v
}

fn sample(ctx: &StageContext<'_>, enabled: bool) -> Result<Files, StageError> {
    let mut m = ctx.manifest_of(StageName::Annotate)?;
    let mut summaries = load_summaries(ctx, StageName::Filter)?;
    if !enabled {
        let kept = sorted_summaries(&summaries, &m);
        return Ok(vec![
            (MANIFEST.into(), manifest_to_bytes(&m)),
            (SUMMARIES.into(), jsonl(&kept)),
            ("traces.json".into(), json(&serde_json::json!({"enabled": false}))),
        ]);
    }
    let emb_path = ctx.dir(StageName::Annotate).join(EMBEDDINGS).display().to_string();
    let rows: Vec<EmbeddingLine> = parse_jsonl(&ctx.read(StageName::Annotate, EMBEDDINGS)?, &emb_path)?;
    let mut embeddings: HashMap<String, Vec<f32>> = rows.into_iter().map(|r| (r.clip_id, r.embedding)).collect();

    // Annotations an earlier stage skipped (for example because it was
    // disabled) are fetched now.
    let gaps: Vec<(ClipRecord, VideoRecord)> = active_with_videos(&m)
        .into_iter()
        .filter(|(c, _)| c.scores.is_none() || !summaries.contains_key(&c.clip_id) || !embeddings.contains_key(&c.clip_id))
        .collect();
    if !gaps.is_empty() {
        log::info!("sample: fetching missing annotations for {} clip(s)", gaps.len());
    }
    let filled = ctx.parallel(&gaps, |(clip, video)| {
        let p = ctx.providers;
        let scores = match clip.scores {
            Some(_) => None,
            None => Some(p.quality(clip, video)?),
        };
        let summary = match summaries.contains_key(&clip.clip_id) {
            true => None,
            false => Some(TrajectorySummary::compute(&clip.clip_id, &p.pose(clip, video)?, JITTER_WINDOW)),
        };
        let embedding = match embeddings.contains_key(&clip.clip_id) {
            true => None,
            false => Some(p.embedding(clip, video)?),
        };
        Ok((scores, summary, embedding))
    })?;
    for ((clip, _), (scores, summary, embedding)) in gaps.iter().zip(filled) {
        if let Some(s) = scores {
            m.clip_mut(&clip.clip_id).expect("clip exists").scores = Some(s);
        }
        if let Some(s) = summary {
            summaries.insert(clip.clip_id.clone(), s);
        }
        if let Some(e) = embedding {
            embeddings.insert(clip.clip_id.clone(), e);
        }
    }

    let inputs = SamplingInputs { embeddings: &embeddings, trajectories: &summaries };
    let run = run_sampling(&mut m, inputs, &ctx.cfg.sampling)?;
    log::info!("sample: kept {} of {} clips", run.kept, run.input);
    let kept = sorted_summaries(&summaries, &m);
    Ok(vec![
        (MANIFEST.into(), manifest_to_bytes(&m)),
        (SUMMARIES.into(), jsonl(&kept)),
        ("traces.json".into(), json(&run)),
    ])
}

fn report(ctx: &StageContext<'_>, enabled: bool) -> Result<Files, StageError> {
    if !enabled {
        return Ok(Vec::new());
    }
    let m = ctx.manifest_of(StageName::Sample)?;
    let summaries = load_summaries(ctx, StageName::Sample)?;
    let r = build_report(&m, &summaries, &ctx.cfg.report);
    let mut files = vec![("report.json".to_string(), report_json(&r))];
    files.extend(report_tables(&r));
    Ok(files)
}
