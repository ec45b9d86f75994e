//! Corpus statistics over the active clips of a manifest.
//!
//! Caption length is counted in whitespace-separated words. Clips without an
//! annotation are tallied in an `unannotated` count next to each histogram,
//! so every histogram's mass equals the number of active clips.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::labels::Dimension;
use crate::manifest::{ClipRecord, Manifest};
use crate::par;
use crate::trajectory::{jitter_bin, quantile_edges, TrajectorySummary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub quality_bin_width: f64,
    pub token_bin_width: u64,
    pub jitter_bins: usize,
    pub jitter_edges: Option<Vec<f64>>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            quality_bin_width: 0.05,
            token_bin_width: 25,
            jitter_bins: 10,
            jitter_edges: None,
        }
    }
}

impl ReportConfig {
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(self.quality_bin_width > 0.0 && self.quality_bin_width <= 1.0) {
            out.push(("quality_bin_width".into(), "must lie in (0, 1]".into()));
        }
        if self.token_bin_width == 0 {
            out.push(("token_bin_width".into(), "must be positive".into()));
        }
        if self.jitter_bins == 0 {
            out.push(("jitter_bins".into(), "must be positive".into()));
        }
        out
    }
}

pub fn token_count(caption: &str) -> usize {
    caption.split_whitespace().count()
}

/// Fixed-edge histogram; `counts[i]` covers `[edges[i], edges[i + 1])`
/// except the last bin, which is closed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub unannotated: u64,
}

impl Histogram {
    pub fn mass(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.unannotated
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenHistogram {
    pub bin_width: u64,
    /// Keyed by the lower bound of each non-empty bin.
    pub counts: BTreeMap<u64, u64>,
    pub unannotated: u64,
    pub mean: f64,
    pub max: u64,
}

impl TokenHistogram {
    pub fn mass(&self) -> u64 {
        self.counts.values().sum::<u64>() + self.unannotated
    }
}

/// Jitter histogram: bin `i < edges.len() + 1` follows the edges, and clips
/// whose jitter is undefined or missing count as unannotated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JitterHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub unannotated: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub counts: BTreeMap<String, u64>,
    pub unannotated: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CountryStats {
    pub clips: u64,
    pub duration_ms: i64,
    pub duration_h: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub active_clips: u64,
    pub videos: u64,
    pub total_duration_ms: i64,
    pub total_duration_h: f64,
    pub countries: BTreeMap<String, CountryStats>,
    pub unlocated: CountryStats,
    pub labels: BTreeMap<String, LabelHistogram>,
    pub quality: Histogram,
    pub tokens: TokenHistogram,
    pub jitter: JitterHistogram,
}

#[derive(Clone, Default)]
struct Acc {
    clips: u64,
    duration_ms: i64,
    countries: BTreeMap<String, (u64, i64)>,
    unlocated: (u64, i64),
    labels: BTreeMap<&'static str, BTreeMap<String, u64>>,
    unlabelled: u64,
    quality: Vec<u64>,
    unscored: u64,
    tokens: BTreeMap<u64, u64>,
    token_sum: u64,
    token_max: u64,
    uncaptioned: u64,
    jitter: Vec<u64>,
    no_jitter: u64,
}

struct Ctx<'a> {
    cfg: &'a ReportConfig,
    quality_bins: usize,
    jitter_edges: &'a [f64],
    summaries: &'a HashMap<String, TrajectorySummary>,
}

fn quality_bin(v: f64, width: f64, bins: usize) -> usize {
    ((v.clamp(0.0, 1.0) / width + 1e-9).floor() as usize).min(bins - 1)
}

impl Acc {
    fn new(ctx: &Ctx<'_>) -> Self {
        Acc {
            quality: vec![0; ctx.quality_bins],
            jitter: vec![0; ctx.jitter_edges.len() + 1],
            ..Default::default()
        }
    }

    fn add(mut self, ctx: &Ctx<'_>, c: &ClipRecord) -> Self {
        let dur = c.span().len().0;
        self.clips += 1;
        self.duration_ms += dur;
        match &c.location {
            Some(l) => {
                let e = self.countries.entry(l.country_code.clone()).or_default();
                e.0 += 1;
                e.1 += dur;
            }
            None => {
                self.unlocated.0 += 1;
                self.unlocated.1 += dur;
            }
        }
        match &c.categories {
            Some(l) => {
                for d in Dimension::ALL {
                    *self.labels.entry(d.name()).or_default().entry(l.get(d).to_string()).or_insert(0) += 1;
                }
            }
            None => self.unlabelled += 1,
        }
        match &c.scores {
            Some(s) => self.quality[quality_bin(s.overall(), ctx.cfg.quality_bin_width, ctx.quality_bins)] += 1,
            None => self.unscored += 1,
        }
        match &c.caption {
            Some(text) => {
                let n = token_count(text) as u64;
                let w = ctx.cfg.token_bin_width;
                *self.tokens.entry(n / w * w).or_insert(0) += 1;
                self.token_sum += n;
                self.token_max = self.token_max.max(n);
            }
            None => self.uncaptioned += 1,
        }
        match ctx.summaries.get(&c.clip_id).and_then(|s| s.jitter) {
            Some(j) => self.jitter[jitter_bin(j, ctx.jitter_edges)] += 1,
            None => self.no_jitter += 1,
        }
        self
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.clips += o.clips;
        self.duration_ms += o.duration_ms;
        for (k, (n, d)) in o.countries {
            let e = self.countries.entry(k).or_default();
            e.0 += n;
            e.1 += d;
        }
        self.unlocated.0 += o.unlocated.0;
        self.unlocated.1 += o.unlocated.1;
        for (dim, h) in o.labels {
            let mine = self.labels.entry(dim).or_default();
            for (l, n) in h {
                *mine.entry(l).or_insert(0) += n;
            }
        }
        self.unlabelled += o.unlabelled;
        self.quality.iter_mut().zip(&o.quality).for_each(|(a, b)| *a += b);
        self.unscored += o.unscored;
        for (k, n) in o.tokens {
            *self.tokens.entry(k).or_insert(0) += n;
        }
        self.token_sum += o.token_sum;
        self.token_max = self.token_max.max(o.token_max);
        self.uncaptioned += o.uncaptioned;
        self.jitter.iter_mut().zip(&o.jitter).for_each(|(a, b)| *a += b);
        self.no_jitter += o.no_jitter;
        self
    }
}

fn hours(ms: i64) -> f64 {
    ms as f64 / 3_600_000.0
}

fn country(clips: u64, ms: i64) -> CountryStats {
    CountryStats { clips, duration_ms: ms, duration_h: hours(ms) }
}

pub fn build_report(
    manifest: &Manifest,
    summaries: &HashMap<String, TrajectorySummary>,
    cfg: &ReportConfig,
) -> CorpusReport {
    let clips: Vec<&ClipRecord> = manifest.active_clips().collect();
    let jitter_edges = match &cfg.jitter_edges {
        Some(e) => e.clone(),
        None => {
            let vals: Vec<f64> = clips
                .iter()
                .filter_map(|c| summaries.get(&c.clip_id).and_then(|s| s.jitter))
                .collect();
            quantile_edges(&vals, cfg.jitter_bins)
        }
    };
    let quality_bins = ((1.0 / cfg.quality_bin_width) - 1e-9).ceil().max(1.0) as usize;
    let ctx = Ctx { cfg, quality_bins, jitter_edges: &jitter_edges, summaries };
    let acc = par::fold(&clips, || Acc::new(&ctx), |a, c| a.add(&ctx, c), Acc::merge);

    let mut labels: BTreeMap<String, LabelHistogram> = BTreeMap::new();
    for d in Dimension::ALL {
        labels.insert(
            d.name().to_string(),
            LabelHistogram {
                counts: acc.labels.get(d.name()).cloned().unwrap_or_default(),
                unannotated: acc.unlabelled,
            },
        );
    }
    let captioned = acc.clips - acc.uncaptioned;
    CorpusReport {
        active_clips: acc.clips,
        videos: manifest.video_count() as u64,
        total_duration_ms: acc.duration_ms,
        total_duration_h: hours(acc.duration_ms),
        countries: acc.countries.into_iter().map(|(k, (n, d))| (k, country(n, d))).collect(),
        unlocated: country(acc.unlocated.0, acc.unlocated.1),
        labels,
        quality: Histogram {
            edges: (0..=quality_bins).map(|i| (i as f64 * cfg.quality_bin_width).min(1.0)).collect(),
            counts: acc.quality,
            unannotated: acc.unscored,
        },
        tokens: TokenHistogram {
            bin_width: cfg.token_bin_width,
            counts: acc.tokens,
            unannotated: acc.uncaptioned,
            mean: if captioned == 0 { 0.0 } else { acc.token_sum as f64 / captioned as f64 },
            max: acc.token_max,
        },
        jitter: JitterHistogram { edges: jitter_edges, counts: acc.jitter, unannotated: acc.no_jitter },
    }
}

pub fn report_json(report: &CorpusReport) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(report).expect("report serializes");
    v.push(b'\n');
    v
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn edge_label(e: &[f64], i: usize) -> (String, String) {
    let lo = if i == 0 { "-inf".to_string() } else { e[i - 1].to_string() };
    let hi = if i == e.len() { "inf".to_string() } else { e[i].to_string() };
    (lo, hi)
}

/// One flat table per histogram, as `(file name, CSV bytes)`.
pub fn report_tables(r: &CorpusReport) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut rows: Vec<Vec<String>> = r
        .countries
        .iter()
        .map(|(k, c)| vec![k.clone(), c.clips.to_string(), c.duration_ms.to_string(), c.duration_h.to_string()])
        .collect();
    rows.push(vec![
        "unannotated".into(),
        r.unlocated.clips.to_string(),
        r.unlocated.duration_ms.to_string(),
        r.unlocated.duration_h.to_string(),
    ]);
    out.push(("countries.csv".into(), table(&["country", "clips", "duration_ms", "duration_h"], rows)));

    for (dim, h) in &r.labels {
        let mut rows: Vec<Vec<String>> = h.counts.iter().map(|(l, n)| vec![l.clone(), n.to_string()]).collect();
        rows.push(vec!["unannotated".into(), h.unannotated.to_string()]);
        out.push((format!("labels_{dim}.csv"), table(&["label", "clips"], rows)));
    }

    let mut rows: Vec<Vec<String>> = r
        .quality
        .counts
        .iter()
        .enumerate()
        .map(|(i, n)| vec![r.quality.edges[i].to_string(), r.quality.edges[i + 1].to_string(), n.to_string()])
        .collect();
    rows.push(vec!["unannotated".into(), String::new(), r.quality.unannotated.to_string()]);
    out.push(("quality.csv".into(), table(&["lo", "hi", "clips"], rows)));

    let w = r.tokens.bin_width;
    let mut rows: Vec<Vec<String>> = r
        .tokens
        .counts
        .iter()
        .map(|(lo, n)| vec![lo.to_string(), (lo + w).to_string(), n.to_string()])
        .collect();
    rows.push(vec!["unannotated".into(), String::new(), r.tokens.unannotated.to_string()]);
    out.push(("tokens.csv".into(), table(&["lo", "hi", "clips"], rows)));

    let mut rows: Vec<Vec<String>> = r
        .jitter
        .counts
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let (lo, hi) = edge_label(&r.jitter.edges, i);
            vec![lo, hi, n.to_string()]
        })
        .collect();
    rows.push(vec!["unannotated".into(), String::new(), r.jitter.unannotated.to_string()]);
    out.push(("jitter.csv".into(), table(&["lo", "hi", "clips"], rows)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::CategoryLabels;
    use crate::manifest::{Location, QualityScores};
    use crate::time::{Millis, Span};

    #[test]
    fn token_examples() {
        assert_eq!(token_count(""), 0);
        assert_eq!(token_count("a busy street in Tokyo"), 5);
        assert_eq!(token_count("  two\twords\n"), 2);
    }

    #[test]
    fn empty_manifest_is_all_zero() {
        let r = build_report(&Manifest::new(), &HashMap::new(), &ReportConfig::default());
        assert_eq!(r.active_clips, 0);
        assert_eq!(r.total_duration_ms, 0);
        assert_eq!(r.quality.mass(), 0);
        assert_eq!(r.quality.counts.len(), 20);
        assert!(r.countries.is_empty());
    }

    fn clip(i: usize) -> ClipRecord {
        let mut c = ClipRecord::new(
            format!("c{i}"),
            "v".into(),
            Span::new(Millis::from_secs(60 * i as i64), Millis::from_secs(60 * i as i64 + 60)),
        );
        if i % 2 == 0 {
            c.location = Some(Location::new(if i % 4 == 0 { "JP" } else { "FR" }, "X"));
            c.caption = Some("word ".repeat(i * 10));
            c.scores = Some(QualityScores { technical: 0.5, aesthetic: 0.5, semantic: (i as f64 / 10.0).min(1.0) });
            c.categories = Some(CategoryLabels::abstain());
        }
        c
    }

    #[test]
    fn unannotated_clips_are_counted() {
        let mut m = Manifest::new();
        for i in 0..10 {
            m.insert_clip(clip(i)).unwrap();
        }
        let r = build_report(&m, &HashMap::new(), &ReportConfig::default());
        assert_eq!(r.active_clips, 10);
        assert_eq!(r.unlocated.clips, 5);
        assert_eq!(r.countries["JP"].clips, 3);
        assert_eq!(r.countries["FR"].clips, 2);
        assert_eq!(r.quality.mass(), 10);
        assert_eq!(r.tokens.mass(), 10);
        assert_eq!(r.jitter.unannotated, 10);
        for h in r.labels.values() {
            assert_eq!(h.counts.values().sum::<u64>() + h.unannotated, 10);
        }
        let dur: i64 = r.countries.values().map(|c| c.duration_ms).sum::<i64>() + r.unlocated.duration_ms;
        assert_eq!(dur, r.total_duration_ms);
        // captions of 0, 20, 40, 60, 80 words
        assert_eq!(r.tokens.mean, 40.0);
        assert_eq!(r.tokens.counts[&50], 1);
        assert_eq!(r.tokens.counts[&75], 1);
    }

    #[test]
    fn quality_bins_close_at_one() {
        assert_eq!(quality_bin(1.0, 0.05, 20), 19);
        assert_eq!(quality_bin(0.0, 0.05, 20), 0);
        assert_eq!(quality_bin(0.15, 0.05, 20), 3);
    }

    #[test]
    fn tables_have_unannotated_rows() {
        let mut m = Manifest::new();
        m.insert_clip(clip(1)).unwrap();
        let r = build_report(&m, &HashMap::new(), &ReportConfig::default());
        let t = report_tables(&r);
        let names: Vec<&str> = t.iter().map(|(n, _)| n.as_str()).collect();
        assert!(names.contains(&"labels_crowd_density.csv"));
        let countries = String::from_utf8(t[0].1.clone()).unwrap();
        assert_eq!(countries, "country,clips,duration_ms,duration_h\nunannotated,1,60000,0.016666666666666666\n");
    }
}
