//! Acceptance suite. Each criterion prints one `PASS` or `FAIL` line; the test
//! fails if any criterion fails. The criteria run one after another so the
//! timing checks do not compete for cores.
//!
//! Run with `cargo test -p clipcurate --test acceptance` (the release-grade
//! test profile is configured in the workspace manifest).

mod common;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread::sleep;
use std::time::Instant;

use clipcurate::runner::{sha256_hex, Checkpoint, CHECKPOINT};
use clipcurate::{PipelineConfig, Providers, Runner, StageName};
use clipcurate_core::filter::{trajectory_verdict, FilterConfig, TrajectoryRule, TrajectoryVerdict};
use clipcurate_core::labels::CategoryLabels;
use clipcurate_core::location::{match_linear, ChapterIndex, MatchOutcome};
use clipcurate_core::manifest::{Chapter, ClipRecord, Location, Source, VideoRecord, ViewKind};
use clipcurate_core::sampling::{category_diversity_sample, run_sampling, SamplingConfig, SamplingInputs, Stage, StageDiagnostics};
use clipcurate_core::segment::{build_shots, head_tail_trim, segment_video, ShotSegment, TransitionSeries};
use clipcurate_core::synth::{corpus, CorpusParams};
use clipcurate_core::time::{Millis, Span};
use clipcurate_core::trajectory::{
    direction_change, jitter, viewpoint_shift, CameraTrajectory, Pose, Quat, Vec3, JITTER_WINDOW,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("trajectory filter matches a brute-force oracle", c1_trajectory_oracle),
        ("default configuration carries the published constants", c2_golden_config),
        ("five samplers compose to a 0.1323 keep ratio", c3_composed_ratio),
        ("category sampling flattens a skewed dimension", c4_category_flattening),
        ("interval tree matches a linear scan", c5_interval_tree),
        ("clips tile shot prefixes", c6_clip_arithmetic),
        ("geometry invariants", c7_geometry),
        ("deterministic and crash-safe stage outputs", c8_determinism_and_atomicity),
        ("100k-clip pipeline throughput", c9_throughput),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        let line = match &outcome {
            Ok(detail) => format!("acceptance {}: PASS  {name} [{detail}] ({secs:.2}s)", i + 1),
            Err(why) => {
                failed.push(i + 1);
                format!("acceptance {}: FAIL  {name}: {why} ({secs:.2}s)", i + 1)
            }
        };
        // Written straight to stderr so the lines show up without --nocapture.
        let _ = writeln!(std::io::stderr(), "{line}");
    }
    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}

// ---------------------------------------------------------------------------
// 1. Trajectory filter oracle

fn unit(r: &mut StdRng) -> Vec3 {
    loop {
        let v: Vec3 = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Rotates `v` about unit `axis` by `deg` (Rodrigues).
fn rotate(v: Vec3, axis: Vec3, deg: f64) -> Vec3 {
    let (s, c) = deg.to_radians().sin_cos();
    let k = axis;
    let cross = [k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]];
    let dot = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    [0, 1, 2].map(|i| v[i] * c + cross[i] * s + k[i] * dot * (1.0 - c))
}

fn perpendicular(r: &mut StdRng, d: Vec3) -> Vec3 {
    let u = unit(r);
    let dot = u[0] * d[0] + u[1] * d[1] + u[2] * d[2];
    let p = [u[0] - dot * d[0], u[1] - dot * d[1], u[2] - dot * d[2]];
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    if n < 1e-3 {
        perpendicular(r, d)
    } else {
        p.map(|x| x / n)
    }
}

fn qmul(a: &Quat, b: &Quat) -> Quat {
    Quat {
        w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    }
}

fn qnormalize(q: Quat) -> Quat {
    let n = (q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
    Quat { w: q.w / n, x: q.x / n, y: q.y / n, z: q.z / n }
}

/// Mixture of straight walking, reversals (often in pairs 8 to 12 s apart),
/// sharp turns, pauses, single-step jumps, steady rotation and sudden
/// viewpoint changes.
fn mixed_trajectory(r: &mut StdRng) -> CameraTrajectory {
    let fps = [25.0, 30.0, 60.0][r.random_range(0..3)];
    let n: usize = if r.random_bool(0.05) { r.random_range(3..30) } else { r.random_range(30..700) };
    let speed = r.random_range(0.05..2.0);
    let dir = unit(r);
    let mut steps: Vec<Vec3> = vec![dir.map(|x| x * speed); n - 1];

    let last = n - 2;
    if r.random_bool(0.4) {
        let first = r.random_range(1..=last);
        let mut flips = vec![first];
        if r.random_bool(0.7) {
            let gap = (r.random_range(8.0..12.0) * fps) as usize;
            flips.push(first + gap);
            if r.random_bool(0.2) {
                flips.push(first + gap + r.random_range(1..(fps as usize * 4)));
            }
        }
        for f in flips.into_iter().filter(|&f| f <= last) {
            for s in &mut steps[f..] {
                *s = s.map(|x| -x);
            }
        }
    }
    if r.random_bool(0.3) {
        let at = r.random_range(1..=last);
        let deg = [45.0, 90.0, 120.0, 165.0][r.random_range(0..4)];
        let axis = perpendicular(r, steps[at]);
        for s in &mut steps[at..] {
            *s = rotate(*s, axis, deg);
        }
    }
    let mut paused = vec![false; n - 1];
    if r.random_bool(0.2) {
        let at = r.random_range(0..=last);
        let len = r.random_range(2..12);
        for i in at..(at + len).min(n - 1) {
            steps[i] = [0.0; 3];
            paused[i] = true;
        }
    }
    if r.random_bool(0.3) {
        let at = r.random_range(0..=last);
        let f = r.random_range(2.0..12.0);
        steps[at] = steps[at].map(|x| x * f);
    }
    for (s, &p) in steps.iter_mut().zip(&paused) {
        if !p {
            for x in s.iter_mut() {
                *x += speed * r.random_range(-0.02..0.02);
            }
        }
    }

    let mut q = qnormalize(Quat { w: r.random_range(-1.0..1.0), x: r.random_range(-1.0..1.0), y: r.random_range(-1.0..1.0), z: r.random_range(-1.0..1.0) });
    let spin = if r.random_bool(0.5) {
        Quat::from_axis_angle(unit(r), r.random_range(0.0f64..1.5).to_radians())
    } else {
        Quat::IDENTITY
    };
    let jump = r.random_bool(0.3).then(|| {
        let deg: f64 = [20.0, 45.0, 75.0, 120.0, 175.0][r.random_range(0..5)];
        (r.random_range(1..n), Quat::from_axis_angle(unit(r), deg.to_radians()))
    });

    let mut pos = [r.random_range(-50.0..50.0), r.random_range(-50.0..50.0), r.random_range(-5.0..5.0)];
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            for k in 0..3 {
                pos[k] += steps[i - 1][k];
            }
            q = qnormalize(qmul(&spin, &q));
            if let Some((at, j)) = jump {
                if at == i {
                    q = qnormalize(qmul(&j, &q));
                }
            }
        }
        frames.push(Pose { t_s: i as f64 / fps, position: pos, orientation: q });
    }
    CameraTrajectory::new(frames).expect("valid trajectory")
}

fn rotation_matrix(q: &Quat) -> [[f64; 3]; 3] {
    let q = qnormalize(*q);
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Brute-force rule checker: acos angles, rotation-matrix geodesics and an
/// explicit loop over every displacement window.
fn oracle(traj: &CameraTrajectory) -> TrajectoryVerdict {
    let f = traj.frames();
    let n = f.len();
    if n < 30 {
        return TrajectoryVerdict::Insufficient;
    }
    let step = |i: usize| -> Vec3 { [0, 1, 2].map(|k| f[i + 1].position[k] - f[i].position[k]) };
    let len = |v: Vec3| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();

    let mut events = Vec::new();
    for i in 1..n - 1 {
        let (a, b) = (step(i - 1), step(i));
        if len(a) <= 1e-6 || len(b) <= 1e-6 {
            continue;
        }
        let cos = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (len(a) * len(b));
        if cos.clamp(-1.0, 1.0).acos().to_degrees() > 150.0 {
            events.push(f[i].t_s);
        }
    }
    for (i, &t) in events.iter().enumerate() {
        if events[i + 1..].iter().any(|&u| u - t <= 10.0) {
            return TrajectoryVerdict::Fail(TrajectoryRule::Reversal);
        }
    }

    for i in 0..n - 1 {
        let (a, b) = (rotation_matrix(&f[i].orientation), rotation_matrix(&f[i + 1].orientation));
        let mut trace = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                trace += a[c][r] * b[c][r];
            }
        }
        let angle = ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
        if angle > 60.0 {
            return TrajectoryVerdict::Fail(TrajectoryRule::Viewpoint);
        }
    }

    for i in 0..n - 1 {
        let mut lo = i as isize - 14;
        if lo < 0 {
            lo = 0;
        }
        if lo as usize + 30 > n {
            lo = (n - 30) as isize;
        }
        let lo = lo as usize;
        let mut sum = 0.0;
        for k in lo..lo + 29 {
            sum += len(step(k));
        }
        if len(step(i)) > 5.0 * (sum / 29.0) {
            return TrajectoryVerdict::Fail(TrajectoryRule::Displacement);
        }
    }
    TrajectoryVerdict::Pass
}

fn c1_trajectory_oracle() -> Outcome {
    let mut r = StdRng::seed_from_u64(20_240_601);
    let trajs: Vec<CameraTrajectory> = (0..1000).map(|_| mixed_trajectory(&mut r)).collect();
    let cfg = FilterConfig::default();
    let started = Instant::now();
    let got: Vec<TrajectoryVerdict> = trajs.iter().map(|t| trajectory_verdict(t, &cfg)).collect();
    let elapsed = started.elapsed().as_secs_f64();
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    for (i, (t, g)) in trajs.iter().zip(&got).enumerate() {
        let want = oracle(t);
        ensure!(*g == want, "trajectory {i} ({} frames): filter says {g:?}, oracle says {want:?}", t.len());
        let key = match want {
            TrajectoryVerdict::Fail(rule) => rule.name().to_string(),
            v => format!("{v:?}").to_lowercase(),
        };
        *tally.entry(key).or_default() += 1;
    }
    ensure!(elapsed < 5.0, "filter took {elapsed:.2}s");
    ensure!(tally.len() == 5, "generator did not exercise every outcome: {tally:?}");
    Ok(format!("1000/1000 agree, {tally:?}, filter time {elapsed:.3}s"))
}

// ---------------------------------------------------------------------------
// 2. Golden configuration

fn c2_golden_config() -> Outcome {
    let cfg = clipcurate::config::parse_config("workspace = \"ws\"\n").map_err(|e| format!("{e:?}"))?;
    ensure!(cfg == PipelineConfig::new("ws"), "parsed defaults differ from the constructed defaults");
    let s = &cfg.segment;
    let f = &cfg.filter;
    let a = &cfg.sampling;
    let golden: [(&str, f64, f64); 19] = [
        ("segment.boundary_threshold", s.boundary_threshold, 0.4),
        ("segment.head_tail_trim_s", s.head_tail_trim_s, 120.0),
        ("segment.shot_trim_s", s.shot_trim_s, 5.0),
        ("segment.clip_len_s", s.clip_len_s, 60.0),
        ("filter.luma_run_len", f.luma_run_len as f64, 15.0),
        ("filter.quality_drop_frac", f.quality_drop_frac, 0.10),
        ("filter.subtitle_min_visible_s", f.subtitle_min_visible_s, 0.75),
        ("filter.reversal_angle_deg", f.reversal_angle_deg, 150.0),
        ("filter.reversal_window_s", f.reversal_window_s, 10.0),
        ("filter.reversal_min_count", f.reversal_min_count as f64, 2.0),
        ("filter.viewpoint_shift_deg", f.viewpoint_shift_deg, 60.0),
        ("filter.displacement_factor", f.displacement_factor, 5.0),
        ("filter.displacement_window_frames", f.displacement_window_frames as f64, 30.0),
        ("sampling.alpha_quality", a.alpha_quality, 0.7),
        ("sampling.alpha_content", a.alpha_content, 0.7),
        ("sampling.alpha_loc", a.alpha_loc, 0.6),
        ("sampling.alpha_cate", a.alpha_cate, 0.6),
        ("sampling.alpha_camera", a.alpha_camera, 0.75),
        ("composed keep ratio", a.alpha_quality * a.alpha_content * a.alpha_loc * a.alpha_cate * a.alpha_camera, 0.1323),
    ];
    for (name, got, want) in golden {
        ensure!((got - want).abs() < 1e-12, "{name} = {got}, expected {want}");
    }
    Ok(format!("{} constants", golden.len()))
}

// ---------------------------------------------------------------------------
// 3. Composed sampling ratio

fn c3_composed_ratio() -> Outcome {
    let started = Instant::now();
    let n = 10_000;
    let mut details = Vec::new();
    for seed in 0..10u64 {
        let mut c = corpus(&CorpusParams { seed, clips: n, ..Default::default() });
        let inputs = SamplingInputs { embeddings: &c.embeddings, trajectories: &c.summaries };
        let cfg = SamplingConfig { seed, ..Default::default() };
        let run = run_sampling(&mut c.manifest, inputs, &cfg).map_err(|e| e.to_string())?;
        let diag = |stage: Stage| run.traces.iter().find(|t| t.stage == stage).map(|t| t.diagnostics.clone());
        let Some(StageDiagnostics::Location(loc)) = diag(Stage::Location) else {
            return Err("no location trace".into());
        };
        let Some(StageDiagnostics::Camera(cam)) = diag(Stage::Camera) else {
            return Err("no camera trace".into());
        };
        let slack = (loc.cities.len() + cam.groups.len() + 5) as f64;
        let expected = 0.1323 * n as f64;
        let dev = run.kept as f64 - expected;
        ensure!(dev.abs() <= slack, "seed {seed}: kept {} vs {expected}, slack {slack}", run.kept);
        details.push(format!("{}±{}", run.kept, slack));
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1}s");
    Ok(format!("kept±slack per seed: {}", details.join(" ")))
}

// ---------------------------------------------------------------------------
// 4. Category flattening

fn c4_category_flattening() -> Outcome {
    let n = 1000;
    let labels: Vec<CategoryLabels> = (0..n)
        .map(|i| CategoryLabels {
            scene: ["urban", "nature", "suburban", "coastal"][i % 4].into(),
            weather: if i % 5 == 0 { "rainy" } else { "sunny" }.into(),
            time_of_day: ["daytime", "night", "dusk"][i % 3].into(),
            crowd_density: "moderate".into(),
        })
        .collect();
    let ids: Vec<String> = (0..n).map(|i| format!("c{i:04}")).collect();
    let items: Vec<(&str, &CategoryLabels)> = ids.iter().map(String::as_str).zip(&labels).collect();
    let mut below = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (sel, _) = category_diversity_sample(&items, 0.6, seed);
        let by_id: HashMap<&str, &CategoryLabels> = items.iter().copied().collect();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for id in &sel.kept {
            *counts.entry(by_id[id.as_str()].weather.as_str()).or_default() += 1;
        }
        let max = *counts.values().max().unwrap_or(&0) as f64;
        let min = if counts.len() < 2 { 0.0 } else { *counts.values().min().unwrap() as f64 };
        let ratio = if min == 0.0 { f64::INFINITY } else { max / min };
        worst = worst.max(ratio);
        if ratio < 4.0 {
            below += 1;
        }
    }
    ensure!(below >= 95, "only {below}/100 seeds flattened the 4:1 weather split");
    Ok(format!("{below}/100 seeds below 4.0, worst ratio {worst:.3}"))
}

// ---------------------------------------------------------------------------
// 5. Interval tree

fn scan(chapters: &[Chapter], span: Span) -> MatchOutcome {
    let mut hits = Vec::new();
    for c in chapters {
        if c.start_s <= span.start && span.end <= c.end_s {
            hits.push(c.location.clone());
        }
    }
    if hits.len() == 1 {
        MatchOutcome::Unique(hits.pop().unwrap())
    } else {
        MatchOutcome::Ambiguous { containing: hits.len() }
    }
}

fn c5_interval_tree() -> Outcome {
    let mut r = StdRng::seed_from_u64(5);
    let mut unique = 0usize;
    let mut ambiguous = 0usize;
    for layout in 0..1000 {
        let horizon = r.random_range(60_000..7_200_000i64);
        let count = r.random_range(0..40);
        let chapters: Vec<Chapter> = (0..count)
            .map(|k| {
                let a = r.random_range(0..horizon);
                let b = if r.random_bool(0.3) { r.random_range(a + 1..=horizon) } else { (a + r.random_range(1..600_000)).min(horizon + 1) };
                Chapter {
                    start_s: Millis(a),
                    end_s: Millis(b),
                    location: Location::new(["JP", "FR", "US"][k % 3], &format!("City{k}")),
                }
            })
            .collect();
        let index = ChapterIndex::from_chapters(&chapters);
        for _ in 0..10_000 {
            let a = r.random_range(0..horizon);
            let len = if r.random_bool(0.5) { 60_000 } else { r.random_range(1..400_000) };
            // Spans starting or ending exactly on chapter bounds hit the edge cases.
            let (a, b) = match (r.random_range(0..4), chapters.is_empty()) {
                (0, false) => {
                    let c = &chapters[r.random_range(0..chapters.len())];
                    (c.start_s.0, c.start_s.0 + len)
                }
                (1, false) => {
                    let c = &chapters[r.random_range(0..chapters.len())];
                    (c.end_s.0 - len, c.end_s.0)
                }
                _ => (a, a + len),
            };
            let span = Span::new(Millis(a), Millis(b));
            let want = scan(&chapters, span);
            let got = index.match_span(span);
            ensure!(got == want, "layout {layout}, span {span}: tree {got:?}, scan {want:?}");
            ensure!(match_linear(&chapters, span) == want, "layout {layout}, span {span}: match_linear disagrees");
            match want {
                MatchOutcome::Unique(_) => unique += 1,
                MatchOutcome::Ambiguous { .. } => ambiguous += 1,
            }
        }
    }
    Ok(format!("10M queries, {unique} unique, {ambiguous} none or several"))
}

// ---------------------------------------------------------------------------
// 6. Clip arithmetic

fn video(source: Source, fps: f64, duration: Millis) -> VideoRecord {
    VideoRecord {
        video_id: "v".into(),
        source,
        view: ViewKind::Walking,
        duration_s: duration,
        fps,
        width: 1920,
        height: 1080,
        title: String::new(),
        description: String::new(),
        chapters: vec![],
    }
}

fn c6_clip_arithmetic() -> Outcome {
    let shot = ShotSegment { video_id: "v".into(), start_s: Millis::from_secs(5), end_s: Millis::from_secs(195) };
    let example = clipcurate_core::segment::extract_clips(&shot, Millis::from_secs(60));
    let spans: Vec<(i64, i64)> = example.iter().map(|c| (c.span().start.0 / 1000, c.span().end.0 / 1000)).collect();
    ensure!(spans == [(5, 65), (65, 125), (125, 185)], "190 s shot gave {spans:?}");

    let mut r = StdRng::seed_from_u64(6);
    let cfg = clipcurate_core::segment::SegmentConfig::default();
    let clip_len = Millis::from_secs(60);
    let mut total = 0;
    for inst in 0..10_000 {
        let fps = [23.976, 24.0, 25.0, 29.97, 30.0, 50.0, 60.0][r.random_range(0..7)];
        let source = if r.random_bool(0.2) { Source::Game } else { Source::Real };
        let duration = Millis(r.random_range(1_000..3_600_000));
        let v = video(source, fps, duration);
        let frames = clipcurate_core::segment::expected_frames(duration, fps);
        let mut probs = vec![0.0f32; frames];
        for _ in 0..r.random_range(0..12) {
            if frames == 0 {
                break;
            }
            let at = r.random_range(0..frames);
            let run = r.random_range(1..5).min(frames - at);
            probs[at..at + run].fill(r.random_range(0.4..1.0));
        }
        let clips = match segment_video(&v, &TransitionSeries { fps, probs: probs.clone() }, &cfg) {
            Ok(c) => c,
            Err(_) => {
                ensure!(source == Source::Real && duration <= Millis::from_secs(240), "instance {inst}: unexpected error");
                continue;
            }
        };
        let usable = head_tail_trim(&v, Millis::from_secs(120)).map_err(|e| e.to_string())?;
        let boundaries: Vec<usize> = (0..frames).filter(|&i| probs[i] >= 0.4 && (i == 0 || probs[i - 1] < 0.4)).collect();
        let shots = build_shots("v", usable, &boundaries, fps, Millis::from_secs(5));
        let mut rest: &[ClipRecord] = &clips;
        for s in &shots {
            let mine: Vec<&ClipRecord> = rest.iter().take_while(|c| s.span().contains_span(&c.span())).collect();
            rest = &rest[mine.len()..];
            let mut cursor = s.start_s;
            for c in &mine {
                ensure!(c.span().start == cursor, "instance {inst}: gap or overlap at {cursor}");
                ensure!(c.span().len() == clip_len, "instance {inst}: clip length {}", c.span().len());
                cursor = c.span().end;
            }
            ensure!(s.end_s - cursor < clip_len, "instance {inst}: remainder {} in shot {:?}", s.end_s - cursor, s.span());
            total += mine.len();
        }
        ensure!(rest.is_empty(), "instance {inst}: {} clip(s) outside every shot", rest.len());
    }
    Ok(format!("190 s example gives 3 clips; 10000 instances, {total} clips"))
}

// ---------------------------------------------------------------------------
// 7. Geometry

fn traj_from(points: &[Vec3]) -> CameraTrajectory {
    CameraTrajectory::new(
        points
            .iter()
            .enumerate()
            .map(|(i, &p)| Pose { t_s: i as f64 / 30.0, position: p, orientation: Quat::IDENTITY })
            .collect(),
    )
    .unwrap()
}

fn c7_geometry() -> Outcome {
    let mut r = StdRng::seed_from_u64(7);
    let mut worst_scale: f64 = 0.0;
    for case in 0..500 {
        let n = r.random_range(JITTER_WINDOW..300);
        // Positions on a 1/1024 grid, integer offsets: every translated
        // coordinate is exactly representable.
        let grid: Vec<Vec3> = (0..n).map(|_| [0; 3].map(|_: i32| r.random_range(-(1 << 20)..(1 << 20)) as f64 / 1024.0)).collect();
        let off: Vec3 = [0; 3].map(|_: i32| r.random_range(-1000..=1000) as f64);
        let moved: Vec<Vec3> = grid.iter().map(|p| [p[0] + off[0], p[1] + off[1], p[2] + off[2]]).collect();
        let (a, b) = (jitter(&traj_from(&grid), JITTER_WINDOW), jitter(&traj_from(&moved), JITTER_WINDOW));
        ensure!(
            a.map(f64::to_bits) == b.map(f64::to_bits),
            "case {case}: jitter {a:?} changed to {b:?} under translation {off:?}"
        );

        let pts: Vec<Vec3> = (0..n).map(|_| [0; 3].map(|_: i32| r.random_range(-100.0..100.0))).collect();
        let s = r.random_range(0.01..100.0);
        let scaled: Vec<Vec3> = pts.iter().map(|p| p.map(|x| x * s)).collect();
        let (j, js) = (jitter(&traj_from(&pts), JITTER_WINDOW).unwrap(), jitter(&traj_from(&scaled), JITTER_WINDOW).unwrap());
        let rel = (js - s * s * j).abs() / (s * s * j);
        worst_scale = worst_scale.max(rel);
        ensure!(rel < 1e-9, "case {case}: scaling by {s} gives relative error {rel:e}");

        let q = qnormalize(Quat { w: r.random_range(-1.0..1.0), x: r.random_range(-1.0..1.0), y: r.random_range(-1.0..1.0), z: r.random_range(-1.0..1.0) });
        let neg = Quat { w: -q.w, x: -q.x, y: -q.y, z: -q.z };
        let d = viewpoint_shift(&q, &neg);
        ensure!(d == 0.0, "case {case}: viewpoint_shift(q, -q) = {d:e}");

        let x: Vec3 = [0; 3].map(|_: i32| r.random_range(-100.0..100.0));
        let y: Vec3 = [0; 3].map(|_: i32| r.random_range(-100.0..100.0));
        let back = traj_from(&[x, y, x]);
        let angle = direction_change(&back, 1).ok_or("no direction change for a reversal")?;
        ensure!((angle - 180.0).abs() < 1e-9, "case {case}: exact reversal measured {angle}");
    }
    Ok(format!("500 cases, worst scaling error {worst_scale:.1e}"))
}

// ---------------------------------------------------------------------------
// 8. Determinism and atomicity

fn run_in_process(cfg: &PipelineConfig) -> Result<(), String> {
    let providers = Providers::from_config(cfg).map_err(|e| e.to_string())?;
    Runner::new(cfg, &providers).run_all().map_err(|e| e.to_string())?;
    Ok(())
}

/// Every checkpoint present on disk parses and lists outputs that exist with
/// the recorded hashes.
fn checkpoints_consistent(ws: &Path) -> Result<usize, String> {
    let mut count = 0;
    for stage in StageName::ORDER {
        let dir = ws.join("stages").join(stage.name());
        let path = dir.join(CHECKPOINT);
        let Ok(bytes) = fs::read(&path) else { continue };
        let cp: Checkpoint = serde_json::from_slice(&bytes).map_err(|e| format!("{}: unreadable checkpoint: {e}", path.display()))?;
        for (name, hash) in &cp.outputs {
            let out = fs::read(dir.join(name)).map_err(|e| format!("{stage}: checkpoint lists {name}, which is missing: {e}"))?;
            ensure!(sha256_hex(&out) == *hash, "{stage}: {name} does not match its checkpoint hash");
        }
        count += 1;
    }
    Ok(count)
}

fn c8_determinism_and_atomicity() -> Outcome {
    let setup = common::fixture_setup(400, 8);
    let mut first = setup.cfg.clone();
    first.workspace = setup.dir.path().join("ws-a");
    let mut second = setup.cfg.clone();
    second.workspace = setup.dir.path().join("ws-b");
    run_in_process(&first)?;
    run_in_process(&second)?;
    let a = common::stage_files(&first.workspace);
    let b = common::stage_files(&second.workspace);
    ensure!(a.len() >= 12, "only {} output files", a.len());
    ensure!(a == b, "two runs over the same fixtures differ");

    let bin = env!("CARGO_BIN_EXE_clipcurate");
    let killed_ws = setup.dir.path().join("ws-killed");
    let spawn = || {
        Command::new(bin)
            .arg("-c")
            .arg(&setup.config_path)
            .arg("--workspace")
            .arg(&killed_ws)
            .arg("run")
            .env("RUST_LOG", "off")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())
    };
    // Time one uninterrupted run to scale the kill points.
    let probe_ws = setup.dir.path().join("ws-probe");
    let started = Instant::now();
    let status = Command::new(bin)
        .args(["-c".as_ref(), setup.config_path.as_os_str(), "--workspace".as_ref(), probe_ws.as_os_str(), "run".as_ref()])
        .env("RUST_LOG", "off")
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "binary run failed: {status}");
    let full = started.elapsed();
    ensure!(common::stage_files(&probe_ws) == a, "binary run differs from the in-process run");

    let mut r = StdRng::seed_from_u64(88);
    let mut seen = Vec::new();
    for kill in 0..20 {
        // Start from scratch now and then so early stages get interrupted too.
        if kill % 5 == 0 {
            let _ = fs::remove_dir_all(&killed_ws);
        }
        let mut child = spawn()?;
        sleep(full.mul_f64(r.random_range(0.0..1.1)));
        let _ = child.kill();
        let _ = child.wait();
        seen.push(checkpoints_consistent(&killed_ws).map_err(|e| format!("after kill {kill}: {e}"))?);
    }
    let status = spawn()?.wait().map_err(|e| e.to_string())?;
    ensure!(status.success(), "resumed run failed: {status}");
    ensure!(common::stage_files(&killed_ws) == a, "resumed run differs from an uninterrupted run");
    Ok(format!("{} identical files; checkpoints left after each kill {seen:?}", a.len()))
}

// ---------------------------------------------------------------------------
// 9. Throughput

fn c9_throughput() -> Outcome {
    // Writing the fixture directory (several GB) is setup and is not timed;
    // provider start-up, which hashes every fixture file, is.
    let setup = common::fixture_setup(100_000, 9);
    let started = Instant::now();
    run_in_process(&setup.cfg)?;
    let secs = started.elapsed().as_secs_f64();
    let report: serde_json::Value = serde_json::from_slice(
        &fs::read(setup.cfg.workspace.join("stages/report/report.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    ensure!(secs < 60.0, "{} clips took {secs:.1}s", setup.clips);
    Ok(format!(
        "{} clips from fixture files in {secs:.1}s on {} thread(s), {} kept",
        setup.clips,
        clipcurate_core::par::threads(),
        report.get("active_clips").cloned().unwrap_or_default()
    ))
}
