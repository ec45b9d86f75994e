//! Throughput of the parallelizable stages.
//!
//! Compare the rayon and sequential builds with saved baselines:
//!
//! ```text
//! cargo bench -p clipcurate-core -- --save-baseline parallel
//! cargo bench -p clipcurate-core --no-default-features -- --baseline parallel
//! ```

use std::collections::HashMap;
use std::hint::black_box;

use clipcurate_core::filter::{trajectory_verdict, FilterConfig};
use clipcurate_core::manifest::{Source, VideoRecord, ViewKind};
use clipcurate_core::par;
use clipcurate_core::sampling::{run_sampling, SamplingConfig, SamplingInputs};
use clipcurate_core::segment::{segment_video, SegmentConfig, TransitionSeries};
use clipcurate_core::stats::{build_report, ReportConfig};
use clipcurate_core::synth::{corpus, trajectory, CorpusParams};
use clipcurate_core::time::Millis;
use clipcurate_core::trajectory::{CameraTrajectory, TrajectorySummary};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};

fn trajectories(c: &mut Criterion) {
    let trajs: Vec<CameraTrajectory> = (0..2000).map(|i| trajectory(1, &format!("t{i}"), 256, 60.0)).collect();
    let cfg = FilterConfig::default();
    let mut g = c.benchmark_group("trajectory");
    g.throughput(Throughput::Elements(trajs.len() as u64));
    g.bench_function("verdict", |b| b.iter(|| par::map(&trajs, |t| trajectory_verdict(black_box(t), &cfg))));
    g.bench_function("summary", |b| b.iter(|| par::map(&trajs, |t| TrajectorySummary::compute("x", t, 30))));
    g.finish();
}

fn segmentation(c: &mut Criterion) {
    let videos: Vec<(VideoRecord, TransitionSeries)> = (0..64)
        .map(|v| {
            let video = VideoRecord {
                video_id: format!("v{v}"),
                source: Source::Real,
                view: ViewKind::Walking,
                duration_s: Millis::from_secs(1800),
                fps: 30.0,
                width: 1280,
                height: 720,
                title: String::new(),
                description: String::new(),
                chapters: vec![],
            };
            let mut probs = vec![0.01f32; 54_000];
            for k in (v as usize..probs.len()).step_by(9001) {
                probs[k] = 0.9;
            }
            (video, TransitionSeries { fps: 30.0, probs })
        })
        .collect();
    let cfg = SegmentConfig::default();
    let mut g = c.benchmark_group("segment");
    g.throughput(Throughput::Elements(videos.len() as u64));
    g.bench_function("videos", |b| b.iter(|| par::map(&videos, |(v, s)| segment_video(v, s, &cfg).unwrap().len())));
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let corpus = corpus(&CorpusParams { clips: 10_000, ..Default::default() });
    let cfg = SamplingConfig::default();
    let mut g = c.benchmark_group("sampling");
    g.sample_size(10);
    g.throughput(Throughput::Elements(10_000));
    g.bench_function("five_stages", |b| {
        b.iter_batched(
            || corpus.manifest.clone(),
            |mut m| {
                let inputs = SamplingInputs { embeddings: &corpus.embeddings, trajectories: &corpus.summaries };
                run_sampling(&mut m, inputs, &cfg).unwrap().kept
            },
            BatchSize::LargeInput,
        )
    });
    g.bench_function("report", |b| {
        b.iter(|| build_report(&corpus.manifest, &corpus.summaries, &ReportConfig::default()).active_clips)
    });
    let empty: HashMap<String, TrajectorySummary> = HashMap::new();
    g.bench_function("report_without_trajectories", |b| {
        b.iter(|| build_report(&corpus.manifest, &empty, &ReportConfig::default()).active_clips)
    });
    g.finish();
}

fn report_mode(_: &mut Criterion) {
    eprintln!("data-parallel helpers: {}", if par::is_parallel() { "rayon" } else { "sequential" });
}

criterion_group!(benches, report_mode, trajectories, segmentation, sampling);
criterion_main!(benches);
