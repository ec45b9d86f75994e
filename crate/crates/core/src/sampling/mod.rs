//! Five-stage subset selection: quality, content, location, category and
//! camera-trajectory sampling, applied in that order. Each stage keeps a
//! fraction `alpha` of what the previous stage kept.
//!
//! All randomness comes from generators seeded by [`derive_seed`] on
//! `(seed, stage, group key)`, so results do not depend on thread scheduling.

mod camera;
mod category;
mod content;
pub mod kmeans;
mod locations;
mod quality;
pub mod quota;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use camera::{camera_diversity_sample, CameraDiagnostics, CameraItem, GroupDiag};
pub use category::{category_diversity_sample, first_draw_probabilities, inverse_frequency_weights, CategoryDiagnostics};
pub use content::{content_diversity_sample, ContentDiagnostics, ContentItem, ContentParams, CountryDiag};
pub use locations::{location_diversity_sample, CityQuota, LocationDiagnostics};
pub use quality::{quality_sample, QualityDiagnostics};

use crate::labels::CategoryLabels;
use crate::manifest::{ClipRecord, Manifest, RemovalReason};
use crate::trajectory::{quantile_edges, TrajectoryBinning, TrajectorySummary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub alpha_quality: f64,
    pub alpha_content: f64,
    pub alpha_loc: f64,
    pub alpha_cate: f64,
    pub alpha_camera: f64,
    pub seed: u64,
    /// Clusters per country; `None` uses `ceil(sqrt(N_country))`.
    pub kmeans_k: Option<usize>,
    pub kmeans_batch_size: usize,
    pub kmeans_iterations: usize,
    pub azimuth_bins: usize,
    pub elevation_bins: usize,
    pub jitter_bins: usize,
    /// Fixed jitter bin edges; `None` derives quantile edges from the stage input.
    pub jitter_edges: Option<Vec<f64>>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            alpha_quality: 0.7,
            alpha_content: 0.7,
            alpha_loc: 0.6,
            alpha_cate: 0.6,
            alpha_camera: 0.75,
            seed: 0,
            kmeans_k: None,
            kmeans_batch_size: 1024,
            kmeans_iterations: 50,
            azimuth_bins: 8,
            elevation_bins: 4,
            jitter_bins: 10,
            jitter_edges: None,
        }
    }
}

impl SamplingConfig {
    /// Field name and message for every out-of-range value.
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("alpha_quality", self.alpha_quality),
            ("alpha_content", self.alpha_content),
            ("alpha_loc", self.alpha_loc),
            ("alpha_cate", self.alpha_cate),
            ("alpha_camera", self.alpha_camera),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                out.push((name.to_string(), format!("must lie in (0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("kmeans_batch_size", self.kmeans_batch_size),
            ("kmeans_iterations", self.kmeans_iterations),
            ("azimuth_bins", self.azimuth_bins),
            ("elevation_bins", self.elevation_bins),
            ("jitter_bins", self.jitter_bins),
        ] {
            if v == 0 {
                out.push((name.to_string(), "must be positive".to_string()));
            }
        }
        if self.kmeans_k == Some(0) {
            out.push(("kmeans_k".to_string(), "must be positive".to_string()));
        }
        if let Some(e) = &self.jitter_edges {
            if e.windows(2).any(|w| !(w[0] < w[1])) || e.iter().any(|v| !v.is_finite()) {
                out.push(("jitter_edges".to_string(), "must be finite and strictly ascending".to_string()));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Quality,
    Content,
    Location,
    Category,
    Camera,
}

impl Stage {
    pub const ORDER: [Stage; 5] = [
        Stage::Quality,
        Stage::Content,
        Stage::Location,
        Stage::Category,
        Stage::Camera,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Quality => "quality",
            Stage::Content => "content",
            Stage::Location => "location",
            Stage::Category => "category",
            Stage::Camera => "camera",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Seed for one stage/group, stable across platforms and releases.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update([0x1f]);
        h.update(p.as_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

pub fn rng_for(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

/// `ceil(alpha * n)`, robust to representation error in `alpha`.
pub fn keep_count(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// `floor((1 - alpha) * n)`, robust to representation error in `alpha`.
pub fn removal_count(alpha: f64, n: usize) -> usize {
    (((1.0 - alpha) * n as f64 + 1e-9).floor().max(0.0) as usize).min(n)
}

/// Kept and removed ids of one stage, each sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub kept: Vec<String>,
    pub removed: Vec<String>,
}

impl Selection {
    /// Splits `all` into kept/removed given the kept ids.
    pub fn from_kept<'a>(all: impl IntoIterator<Item = &'a str>, kept: impl IntoIterator<Item = &'a str>) -> Self {
        let kept_set: std::collections::HashSet<&str> = kept.into_iter().collect();
        let mut sel = Selection::default();
        for id in all {
            if kept_set.contains(id) {
                sel.kept.push(id.to_string());
            } else {
                sel.removed.push(id.to_string());
            }
        }
        sel.kept.sort();
        sel.removed.sort();
        sel
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum StageDiagnostics {
    Quality(QualityDiagnostics),
    Content(ContentDiagnostics),
    Location(LocationDiagnostics),
    Category(CategoryDiagnostics),
    Camera(CameraDiagnostics),
}

/// Audit record of one sampling stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    pub stage: Stage,
    pub alpha: f64,
    pub seed: u64,
    pub input: usize,
    pub kept: Vec<String>,
    pub removed: Vec<String>,
    pub diagnostics: StageDiagnostics,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("{stage} sampling: {count} clip(s) lack {what}, e.g. {examples:?}")]
    MissingAnnotation {
        stage: Stage,
        what: &'static str,
        count: usize,
        examples: Vec<String>,
    },
    #[error("content sampling: embedding of {clip} has dimension {got}, expected {expected}")]
    EmbeddingDimension { clip: String, got: usize, expected: usize },
    #[error("content sampling: embedding of {0} has non-finite entries")]
    EmbeddingValue(String),
    #[error("invalid sampling configuration: {0}")]
    Config(String),
}

fn missing(stage: Stage, what: &'static str, ids: Vec<&str>) -> Result<(), SamplingError> {
    if ids.is_empty() {
        return Ok(());
    }
    Err(SamplingError::MissingAnnotation {
        stage,
        what,
        count: ids.len(),
        examples: ids.iter().take(5).map(|s| s.to_string()).collect(),
    })
}

/// Per-clip artifacts the samplers need beyond the manifest.
#[derive(Clone, Copy, Debug)]
pub struct SamplingInputs<'a> {
    pub embeddings: &'a HashMap<String, Vec<f32>>,
    pub trajectories: &'a HashMap<String, TrajectorySummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingRun {
    pub seed: u64,
    pub input: usize,
    pub kept: usize,
    pub traces: Vec<SampleTrace>,
}

#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct SamplingFailure {
    pub error: SamplingError,
    /// Traces of the stages that completed before the failure.
    pub partial: Vec<SampleTrace>,
}

fn score_of(c: &ClipRecord) -> f64 {
    c.scores.map(|s| s.sampling_score()).unwrap_or(f64::NEG_INFINITY)
}

/// Runs all five stages over the active clips of `manifest`, marking every
/// clip a stage drops as removed by the sampler.
pub fn run_sampling(
    manifest: &mut Manifest,
    inputs: SamplingInputs<'_>,
    cfg: &SamplingConfig,
) -> Result<SamplingRun, SamplingFailure> {
    let mut traces = Vec::new();
    let fail = |error, traces: &Vec<SampleTrace>| SamplingFailure { error, partial: traces.clone() };
    if let Some((field, msg)) = cfg.problems().into_iter().next() {
        return Err(fail(SamplingError::Config(format!("{field}: {msg}")), &traces));
    }
    let input_count = manifest.active_clips().count();

    for stage in Stage::ORDER {
        let trace = {
            let active: Vec<&ClipRecord> = manifest.active_clips().collect();
            run_stage(stage, &active, inputs, cfg).map_err(|e| fail(e, &traces))?
        };
        for id in &trace.removed {
            if let Some(c) = manifest.clip_mut(id) {
                c.remove(RemovalReason::Sampler);
            }
        }
        traces.push(trace);
    }
    Ok(SamplingRun {
        seed: cfg.seed,
        input: input_count,
        kept: manifest.active_clips().count(),
        traces,
    })
}

fn run_stage(
    stage: Stage,
    clips: &[&ClipRecord],
    inputs: SamplingInputs<'_>,
    cfg: &SamplingConfig,
) -> Result<SampleTrace, SamplingError> {
    let stage_seed = derive_seed(cfg.seed, &[stage.name()]);
    let (alpha, selection, diagnostics) = match stage {
        Stage::Quality => {
            missing(stage, "quality scores", clips.iter().filter(|c| c.scores.is_none()).map(|c| c.clip_id.as_str()).collect())?;
            let items: Vec<(&str, f64)> = clips.iter().map(|c| (c.clip_id.as_str(), score_of(c))).collect();
            let (sel, diag) = quality_sample(&items, cfg.alpha_quality);
            (cfg.alpha_quality, sel, StageDiagnostics::Quality(diag))
        }
        Stage::Content => {
            missing(stage, "a location", clips.iter().filter(|c| c.location.is_none()).map(|c| c.clip_id.as_str()).collect())?;
            missing(
                stage,
                "an embedding",
                clips.iter().filter(|c| !inputs.embeddings.contains_key(&c.clip_id)).map(|c| c.clip_id.as_str()).collect(),
            )?;
            let mut groups: BTreeMap<String, Vec<ContentItem<'_>>> = BTreeMap::new();
            let mut dim = None;
            for c in clips {
                let e = &inputs.embeddings[&c.clip_id];
                let expected = *dim.get_or_insert(e.len());
                if e.len() != expected {
                    return Err(SamplingError::EmbeddingDimension { clip: c.clip_id.clone(), got: e.len(), expected });
                }
                if e.iter().any(|v| !v.is_finite()) {
                    return Err(SamplingError::EmbeddingValue(c.clip_id.clone()));
                }
                groups
                    .entry(c.location.as_ref().unwrap().country_code.clone())
                    .or_default()
                    .push(ContentItem { id: &c.clip_id, score: score_of(c), embedding: e });
            }
            let params = ContentParams {
                k: cfg.kmeans_k,
                batch_size: cfg.kmeans_batch_size,
                iterations: cfg.kmeans_iterations,
            };
            let (sel, diag) = content_diversity_sample(&groups, cfg.alpha_content, &params, cfg.seed);
            (cfg.alpha_content, sel, StageDiagnostics::Content(diag))
        }
        Stage::Location => {
            missing(stage, "a location", clips.iter().filter(|c| c.location.is_none()).map(|c| c.clip_id.as_str()).collect())?;
            let mut groups: BTreeMap<String, Vec<(&str, f64)>> = BTreeMap::new();
            for c in clips {
                groups
                    .entry(c.location.as_ref().unwrap().city_key())
                    .or_default()
                    .push((&c.clip_id, score_of(c)));
            }
            let (sel, diag) = location_diversity_sample(&groups, cfg.alpha_loc);
            (cfg.alpha_loc, sel, StageDiagnostics::Location(diag))
        }
        Stage::Category => {
            missing(stage, "category labels", clips.iter().filter(|c| c.categories.is_none()).map(|c| c.clip_id.as_str()).collect())?;
            let items: Vec<(&str, &CategoryLabels)> =
                clips.iter().map(|c| (c.clip_id.as_str(), c.categories.as_ref().unwrap())).collect();
            let (sel, diag) = category_diversity_sample(&items, cfg.alpha_cate, cfg.seed);
            (cfg.alpha_cate, sel, StageDiagnostics::Category(diag))
        }
        Stage::Camera => {
            missing(
                stage,
                "a trajectory summary",
                clips.iter().filter(|c| !inputs.trajectories.contains_key(&c.clip_id)).map(|c| c.clip_id.as_str()).collect(),
            )?;
            let summaries: Vec<&TrajectorySummary> = clips.iter().map(|c| &inputs.trajectories[&c.clip_id]).collect();
            let binning = binning_for(&summaries, cfg);
            let items: Vec<CameraItem<'_>> = clips
                .iter()
                .zip(&summaries)
                .map(|(c, s)| {
                    let (direction_bin, jitter_bin) = binning.bins(s);
                    CameraItem { id: &c.clip_id, direction_bin, jitter_bin }
                })
                .collect();
            let (sel, diag) = camera_diversity_sample(&items, cfg.alpha_camera, cfg.seed, binning);
            (cfg.alpha_camera, sel, StageDiagnostics::Camera(diag))
        }
    };
    Ok(SampleTrace {
        stage,
        alpha,
        seed: stage_seed,
        input: clips.len(),
        kept: selection.kept,
        removed: selection.removed,
        diagnostics,
    })
}

/// Binning for a set of summaries: configured edges, or quantile edges of
/// the known jitter values.
pub fn binning_for(summaries: &[&TrajectorySummary], cfg: &SamplingConfig) -> TrajectoryBinning {
    let jitter_edges = match &cfg.jitter_edges {
        Some(e) => e.clone(),
        None => {
            let values: Vec<f64> = summaries.iter().filter_map(|s| s.jitter).collect();
            quantile_edges(&values, cfg.jitter_bins)
        }
    };
    TrajectoryBinning {
        azimuth_bins: cfg.azimuth_bins,
        elevation_bins: cfg.elevation_bins,
        jitter_edges,
    }
}

/// Sort key putting higher scores first and breaking ties by smaller id.
pub(crate) fn rank_cmp(a: (&str, f64), b: (&str, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}
