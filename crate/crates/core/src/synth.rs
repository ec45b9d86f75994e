//! Deterministic synthetic annotations and corpora.
//!
//! Every generator is a pure function of `(seed, kind, reference)`, so any
//! single clip's annotation can be produced on demand without generating the
//! rest of the corpus.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::labels::{CategoryLabels, Dimension, Vocabulary};
use crate::manifest::{Chapter, ClipRecord, Location, Manifest, QualityScores, Source, VideoRecord, ViewKind};
use crate::sampling::rng_for;
use crate::time::{Millis, Span};
use crate::trajectory::{CameraTrajectory, Pose, Quat, TrajectorySummary, JITTER_WINDOW};

pub const COUNTRIES: [&str; 40] = [
    "JP", "US", "FR", "IT", "ES", "GB", "DE", "CN", "KR", "TH", "VN", "ID", "IN", "TR", "GR", "PT", "NL", "BE", "CH",
    "AT", "CZ", "PL", "HU", "SE", "NO", "DK", "FI", "IE", "MX", "BR", "AR", "PE", "CO", "CA", "AU", "NZ", "ZA", "MA",
    "EG", "AE",
];

const WORDS: [&str; 24] = [
    "the", "camera", "moves", "slowly", "along", "a", "busy", "street", "with", "shops", "and", "people", "walking",
    "under", "bright", "lights", "near", "old", "buildings", "while", "cars", "pass", "by", "quietly",
];

pub fn rng(seed: u64, kind: &str, reference: &str) -> ChaCha8Rng {
    rng_for(seed, &["synth", kind, reference])
}

pub fn quality_scores(seed: u64, clip: &str) -> QualityScores {
    let mut r = rng(seed, "quality", clip);
    QualityScores {
        technical: r.random_range(0.2..1.0),
        aesthetic: r.random_range(0.2..1.0),
        semantic: r.random_range(0.2..1.0),
    }
}

/// Labels drawn with geometrically decaying label weights, so every
/// dimension is skewed towards its first labels.
pub fn category_labels(seed: u64, clip: &str, vocab: &Vocabulary) -> CategoryLabels {
    let mut r = rng(seed, "category", clip);
    let mut pick = |d: Dimension| {
        let labels = vocab.labels(d);
        let weights: Vec<f64> = (0..labels.len()).map(|i| 0.6f64.powi(i as i32)).collect();
        let mut u = r.random::<f64>() * weights.iter().sum::<f64>();
        for (l, w) in labels.iter().zip(&weights) {
            if u < *w {
                return l.clone();
            }
            u -= w;
        }
        labels.last().cloned().unwrap_or_else(|| crate::labels::ABSTAIN.to_string())
    };
    CategoryLabels {
        scene: pick(Dimension::Scene),
        weather: pick(Dimension::Weather),
        time_of_day: pick(Dimension::TimeOfDay),
        crowd_density: pick(Dimension::CrowdDensity),
    }
}

pub fn caption(seed: u64, clip: &str) -> String {
    let mut r = rng(seed, "caption", clip);
    let n = r.random_range(120..=240);
    let mut out = String::with_capacity(n * 7);
    for i in 0..n {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(WORDS.choose(&mut r).unwrap());
    }
    out
}

/// Embedding near one of `topics` shared centres; clips of the same topic
/// are near-duplicates of each other.
pub fn embedding(seed: u64, clip: &str, dim: usize, topics: usize) -> Vec<f32> {
    let mut r = rng(seed, "embedding", clip);
    let topic = r.random_range(0..topics.max(1));
    let mut c = rng(seed, "topic", &topic.to_string());
    (0..dim)
        .map(|_| c.random_range(-1.0f32..1.0) + r.random_range(-0.15f32..0.15))
        .collect()
}

/// Forward walk with slowly drifting heading and yaw, plus positional shake
/// whose amplitude varies per clip. Roughly one clip in twenty carries a
/// single displacement spike.
pub fn trajectory(seed: u64, clip: &str, frames: usize, duration_s: f64) -> CameraTrajectory {
    let mut r = rng(seed, "pose", clip);
    let heading0 = r.random_range(0.0..2.0 * PI);
    let climb = r.random_range(-0.3..0.3);
    let speed = r.random_range(0.5..2.0);
    let shake = 10f64.powf(r.random_range(-3.0..-1.0));
    let spike = if r.random_bool(0.05) && frames > 40 { Some(r.random_range(20..frames - 10)) } else { None };
    let dt = duration_s / frames.max(1) as f64;
    let mut pos = [0.0f64; 3];
    let mut heading = heading0;
    let mut out = Vec::with_capacity(frames);
    for i in 0..frames {
        heading += r.random_range(-0.02..0.02);
        let step = speed * dt;
        pos[0] += step * heading.cos();
        pos[1] += step * heading.sin();
        pos[2] += step * climb;
        if spike == Some(i) {
            pos[0] += 40.0 * step;
        }
        let jittered = [
            pos[0] + r.random_range(-shake..shake),
            pos[1] + r.random_range(-shake..shake),
            pos[2] + r.random_range(-shake..shake),
        ];
        out.push(Pose {
            t_s: i as f64 * dt,
            position: jittered,
            orientation: Quat::from_axis_angle([0.0, 0.0, 1.0], heading),
        });
    }
    CameraTrajectory::new(out).expect("generated poses are valid")
}

/// Chapters covering `[0, duration)` in consecutive pieces, each in one of
/// the given locations.
pub fn chapters(seed: u64, video: &str, duration: Millis, locations: &[Location]) -> Vec<Chapter> {
    let mut r = rng(seed, "chapters", video);
    let mut out = Vec::new();
    let mut t = 0;
    while t < duration.0 && !locations.is_empty() {
        let len = r.random_range(300_000..900_000);
        let end = (t + len).min(duration.0);
        out.push(Chapter {
            start_s: Millis(t),
            end_s: Millis(end),
            location: locations.choose(&mut r).unwrap().clone(),
        });
        t = end;
    }
    out
}

#[derive(Clone, Debug)]
pub struct CorpusParams {
    pub seed: u64,
    pub clips: usize,
    pub clips_per_video: usize,
    pub countries: usize,
    pub max_cities_per_country: usize,
    pub embedding_dim: usize,
    pub topics: usize,
    pub trajectory_frames: usize,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            seed: 0,
            clips: 10_000,
            clips_per_video: 20,
            countries: 30,
            max_cities_per_country: 6,
            embedding_dim: 32,
            topics: 200,
            trajectory_frames: 64,
        }
    }
}

/// Fully annotated corpus held in memory.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub manifest: Manifest,
    pub embeddings: HashMap<String, Vec<f32>>,
    pub summaries: HashMap<String, TrajectorySummary>,
}

/// Location of every video, with country sizes falling off as `1/rank`.
pub fn video_location(seed: u64, video: &str, countries: usize, max_cities: usize) -> Location {
    let mut r = rng(seed, "location", video);
    let n = countries.clamp(1, COUNTRIES.len());
    let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    let mut u = r.random::<f64>() * harmonic;
    let mut ci = n - 1;
    for k in 0..n {
        let w = 1.0 / (k + 1) as f64;
        if u < w {
            ci = k;
            break;
        }
        u -= w;
    }
    let cities = 1 + (derive_small(seed, COUNTRIES[ci]) % max_cities.max(1));
    let city = r.random_range(0..cities);
    Location::new(COUNTRIES[ci], &format!("City{city}"))
}

fn derive_small(seed: u64, key: &str) -> usize {
    (crate::sampling::derive_seed(seed, &["synth", "cities", key]) % 1024) as usize
}

pub fn corpus(p: &CorpusParams) -> Corpus {
    let vocab = Vocabulary::default();
    let mut c = Corpus::default();
    let videos = p.clips.div_ceil(p.clips_per_video.max(1));
    let mut made = 0;
    for v in 0..videos {
        let video_id = format!("syn{v:06}");
        let n = p.clips_per_video.min(p.clips - made);
        let loc = video_location(p.seed, &video_id, p.countries, p.max_cities_per_country);
        let duration = Millis::from_secs(60 * n as i64);
        c.manifest
            .insert_video(VideoRecord {
                video_id: video_id.clone(),
                source: Source::Real,
                view: ViewKind::Walking,
                duration_s: duration,
                fps: 30.0,
                width: 1280,
                height: 720,
                title: String::new(),
                description: String::new(),
                chapters: vec![Chapter { start_s: Millis::ZERO, end_s: duration, location: loc.clone() }],
            })
            .expect("unique video id");
        for k in 0..n {
            let start = Millis::from_secs(60 * k as i64);
            let span = Span::new(start, start + Millis::from_secs(60));
            let clip_id = crate::segment::clip_id(&video_id, start);
            let mut clip = ClipRecord::new(clip_id.clone(), video_id.clone(), span);
            clip.location = Some(loc.clone());
            clip.scores = Some(quality_scores(p.seed, &clip_id));
            clip.categories = Some(category_labels(p.seed, &clip_id, &vocab));
            clip.caption = Some(caption(p.seed, &clip_id));
            let traj = trajectory(p.seed, &clip_id, p.trajectory_frames, 60.0);
            c.summaries.insert(clip_id.clone(), TrajectorySummary::compute(&clip_id, &traj, JITTER_WINDOW));
            c.embeddings.insert(clip_id.clone(), embedding(p.seed, &clip_id, p.embedding_dim, p.topics));
            c.manifest.insert_clip(clip).expect("unique clip id");
        }
        made += n;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{trajectory_verdict, FilterConfig};

    #[test]
    fn generators_are_pure() {
        assert_eq!(quality_scores(1, "a"), quality_scores(1, "a"));
        assert_ne!(quality_scores(1, "a"), quality_scores(1, "b"));
        assert_eq!(caption(3, "x"), caption(3, "x"));
        assert_eq!(trajectory(3, "x", 64, 60.0), trajectory(3, "x", 64, 60.0));
    }

    #[test]
    fn corpus_shape() {
        let c = corpus(&CorpusParams { clips: 205, ..Default::default() });
        assert_eq!(c.manifest.clip_count(), 205);
        assert_eq!(c.manifest.video_count(), 11);
        assert_eq!(c.embeddings.len(), 205);
        assert!(c.manifest.validate(&Default::default()).is_empty());
    }

    #[test]
    fn most_trajectories_pass_the_filter() {
        let cfg = FilterConfig::default();
        let fails = (0..200)
            .filter(|i| trajectory_verdict(&trajectory(0, &format!("c{i}"), 64, 60.0), &cfg).failed())
            .count();
        assert!(fails < 40, "{fails}");
    }

    #[test]
    fn chapters_tile_the_video() {
        let locs = [Location::new("JP", "Tokyo"), Location::new("JP", "Kyoto")];
        let ch = chapters(0, "v", Millis::from_secs(3600), &locs);
        assert_eq!(ch[0].start_s, Millis::ZERO);
        assert_eq!(ch.last().unwrap().end_s, Millis::from_secs(3600));
        assert!(ch.windows(2).all(|w| w[0].end_s == w[1].start_s));
    }
}
