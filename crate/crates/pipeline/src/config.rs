//! Pipeline configuration file (TOML).
//!
//! Every section is optional; omitted fields take the defaults of the
//! corresponding core type. Relative paths are resolved against the
//! directory holding the configuration file.

use std::fmt;
use std::path::{Path, PathBuf};

use clipcurate_core::filter::FilterConfig;
use clipcurate_core::labels::{Vocabulary, ABSTAIN};
use clipcurate_core::sampling::SamplingConfig;
use clipcurate_core::segment::SegmentConfig;
use clipcurate_core::stats::ReportConfig;
use serde::{Deserialize, Serialize};

use crate::stage::StageName;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub workspace: PathBuf,
    /// Video manifest read by the collect stage. Without one the corpus is empty.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Upper bound on concurrent per-item work, and so on provider calls in
    /// flight. 0 uses one worker per core.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub stages: StageToggles,
    #[serde(default)]
    pub segment: SegmentConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub vocabulary: Vocabulary,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub provider: ProviderConfig,
}

fn default_parallelism() -> usize {
    8
}

impl PipelineConfig {
    pub fn new(workspace: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            workspace: workspace.into(),
            input: None,
            parallelism: default_parallelism(),
            stages: StageToggles::default(),
            segment: SegmentConfig::default(),
            filter: FilterConfig::default(),
            vocabulary: Vocabulary::default(),
            sampling: SamplingConfig::default(),
            report: ReportConfig::default(),
            provider: ProviderConfig::default(),
        }
    }
}

/// Enable flag per stage. A disabled stage passes its input through.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub collect: bool,
    pub segment: bool,
    pub filter: bool,
    pub annotate: bool,
    pub sample: bool,
    pub report: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles { collect: true, segment: true, filter: true, annotate: true, sample: true, report: true }
    }
}

impl StageToggles {
    pub fn enabled(&self, stage: StageName) -> bool {
        match stage {
            StageName::Collect => self.collect,
            StageName::Segment => self.segment,
            StageName::Filter => self.filter,
            StageName::Annotate => self.annotate,
            StageName::Sample => self.sample,
            StageName::Report => self.report,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    /// No provider; stages that need annotations fail when one is missing.
    #[default]
    None,
    Fixture,
    Remote,
    /// Deterministic in-process generator, for demos and load tests.
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub fixture_dir: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    /// Cache responses under `<workspace>/cache`.
    pub cache: bool,
    pub synthetic: SyntheticConfig,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            mode: ProviderMode::None,
            fixture_dir: None,
            endpoint: None,
            timeout_ms: 30_000,
            max_attempts: 4,
            backoff_ms: 200,
            cache: false,
            synthetic: SyntheticConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub embedding_dim: usize,
    pub topics: usize,
    pub pose_frames: usize,
    pub countries: usize,
    pub max_cities_per_country: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            embedding_dim: 32,
            topics: 200,
            pose_frames: 64,
            countries: 30,
            max_cities_per_country: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted path of the offending field; empty for file-level problems.
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

fn err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

/// Command-line adjustments applied after parsing and before validation.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub workspace: Option<PathBuf>,
    pub seed: Option<u64>,
    pub fixtures: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(ws) = &self.workspace {
            cfg.workspace = ws.clone();
        }
        if let Some(seed) = self.seed {
            cfg.sampling.seed = seed;
        }
        if let Some(dir) = &self.fixtures {
            cfg.provider.mode = ProviderMode::Fixture;
            cfg.provider.fixture_dir = Some(dir.clone());
        }
    }
}

/// Reads, fills defaults and validates a configuration file.
pub fn validate_config(path: &Path) -> Result<PipelineConfig, Vec<ConfigError>> {
    load_config(path, &Overrides::default())
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<PipelineConfig, Vec<ConfigError>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![err("", format!("cannot read {}: {e}", path.display()))])?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    resolve_paths(&mut cfg, base);
    overrides.apply(&mut cfg);
    let errors = check(&cfg);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

pub fn parse_config(text: &str) -> Result<PipelineConfig, Vec<ConfigError>> {
    toml::from_str(text).map_err(|e| {
        let field = e
            .span()
            .map(|s| field_at(text, s.start))
            .unwrap_or_default();
        vec![err(field, e.message().to_string())]
    })
}

/// Best-effort dotted key path of the TOML entry at a byte offset.
fn field_at(text: &str, offset: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    for line in text[..offset.min(text.len())].lines().chain(text[offset.min(text.len())..].lines().take(1)) {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            table = name.trim().to_string();
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().to_string();
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

fn resolve_paths(cfg: &mut PipelineConfig, base: &Path) {
    let join = |p: &mut PathBuf| {
        if p.is_relative() && !base.as_os_str().is_empty() {
            *p = base.join(&*p);
        }
    };
    join(&mut cfg.workspace);
    if let Some(p) = cfg.input.as_mut() {
        join(p);
    }
    if let Some(p) = cfg.provider.fixture_dir.as_mut() {
        join(p);
    }
}

/// All validation problems of an in-memory configuration.
pub fn check(cfg: &PipelineConfig) -> Vec<ConfigError> {
    let mut out = Vec::new();
    if cfg.workspace.as_os_str().is_empty() {
        out.push(err("workspace", "must be set"));
    }
    if let Some(input) = &cfg.input {
        if !input.is_file() {
            out.push(err("input", format!("{} does not exist", input.display())));
        }
    }
    let s = &cfg.segment;
    if !(s.boundary_threshold > 0.0 && s.boundary_threshold <= 1.0) {
        out.push(err("segment.boundary_threshold", "must lie in (0, 1]"));
    }
    if !(s.head_tail_trim_s >= 0.0 && s.head_tail_trim_s.is_finite()) {
        out.push(err("segment.head_tail_trim_s", "must be non-negative"));
    }
    if !(s.shot_trim_s >= 0.0 && s.shot_trim_s.is_finite()) {
        out.push(err("segment.shot_trim_s", "must be non-negative"));
    }
    if !(s.clip_len_s > 0.0 && s.clip_len_s.is_finite()) {
        out.push(err("segment.clip_len_s", "must be positive"));
    }
    for (section, problems) in [
        ("filter", cfg.filter.problems()),
        ("sampling", cfg.sampling.problems()),
        ("report", cfg.report.problems()),
    ] {
        out.extend(problems.into_iter().map(|(f, m)| err(format!("{section}.{f}"), m)));
    }
    for dim in clipcurate_core::labels::Dimension::ALL {
        let labels = cfg.vocabulary.labels(dim);
        let field = format!("vocabulary.{}", dim.name());
        if labels.is_empty() {
            out.push(err(&field, "must list at least one label"));
        }
        if labels.iter().any(|l| l == ABSTAIN || l.is_empty()) {
            out.push(err(&field, format!("labels must be non-empty and not {ABSTAIN:?}")));
        }
        let mut sorted = labels.to_vec();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            out.push(err(&field, "contains duplicate labels"));
        }
    }
    let p = &cfg.provider;
    match p.mode {
        ProviderMode::Fixture => match &p.fixture_dir {
            None => out.push(err("provider.fixture_dir", "required when provider.mode = \"fixture\"")),
            Some(d) if !d.is_dir() => {
                out.push(err("provider.fixture_dir", format!("{} does not exist", d.display())))
            }
            Some(_) => {}
        },
        ProviderMode::Remote => {
            let endpoint = p.endpoint.clone().or_else(|| std::env::var(crate::provider::remote::ENDPOINT_ENV).ok());
            let any_kind = crate::provider::Kind::ALL
                .iter()
                .any(|k| std::env::var(crate::provider::remote::kind_env(*k)).is_ok());
            match endpoint {
                None if !any_kind => out.push(err("provider.endpoint", "required when provider.mode = \"remote\"")),
                Some(e) if !e.starts_with("http://") => {
                    out.push(err("provider.endpoint", "must be an http:// URL"))
                }
                _ => {}
            }
        }
        ProviderMode::Synthetic => {
            let syn = &p.synthetic;
            if syn.embedding_dim == 0 {
                out.push(err("provider.synthetic.embedding_dim", "must be positive"));
            }
            if syn.pose_frames < 2 {
                out.push(err("provider.synthetic.pose_frames", "must be at least 2"));
            }
            if syn.countries == 0 {
                out.push(err("provider.synthetic.countries", "must be positive"));
            }
            if syn.max_cities_per_country == 0 {
                out.push(err("provider.synthetic.max_cities_per_country", "must be positive"));
            }
        }
        ProviderMode::None => {}
    }
    if p.max_attempts == 0 {
        out.push(err("provider.max_attempts", "must be at least 1"));
    }
    if p.timeout_ms == 0 {
        out.push(err("provider.timeout_ms", "must be positive"));
    }
    out
}

/// JSON of a configuration subtree, used in stage digests.
pub fn subtree_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("config serializes")
}
