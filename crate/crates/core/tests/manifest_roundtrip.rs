use clipcurate_core::labels::CategoryLabels;
use clipcurate_core::manifest::{
    manifest_to_bytes, parse_manifest, save_manifest, load_manifest, Chapter, ClipRecord, Location, Manifest,
    QualityScores, RemovalReason, Source, ValidationRules, VideoRecord, ViewKind,
};
use clipcurate_core::time::{Millis, Span};
use proptest::prelude::*;

fn video(id: usize, clips: usize, game: bool) -> VideoRecord {
    let dur = Millis::from_secs(60 * clips as i64 + 7);
    VideoRecord {
        video_id: format!("v{id:03}"),
        source: if game { Source::Game } else { Source::Real },
        view: if id % 3 == 0 { ViewKind::Drone } else { ViewKind::Walking },
        duration_s: dur,
        fps: if game { 60.0 } else { 29.97 },
        width: 1920,
        height: 1080,
        title: format!("walk \"{id}\" ñ 東京"),
        description: String::new(),
        chapters: vec![Chapter {
            start_s: Millis::ZERO,
            end_s: dur,
            location: Location::new("JP", "Tokyo"),
        }],
    }
}

fn clip(v: &VideoRecord, k: usize, flavour: u8) -> ClipRecord {
    let start = Millis(60_000 * k as i64 + 33);
    let mut c = ClipRecord::new(
        format!("{}-c{:09}", v.video_id, start.0),
        v.video_id.clone(),
        Span::new(start, start + Millis::from_secs(60)),
    );
    if flavour & 1 != 0 {
        c.scores = Some(QualityScores { technical: 0.25, aesthetic: 0.5, semantic: 0.125 });
    }
    if flavour & 2 != 0 {
        c.categories = Some(CategoryLabels::abstain());
        c.caption = Some("a quiet\tstreet\n".into());
    }
    if flavour & 4 != 0 {
        c.remove(RemovalReason::Subtitle);
    }
    if flavour & 8 != 0 {
        c.location = Some(Location::new("FR", "Paris"));
        c.trajectory_ref = Some(format!("pose/{}.traj", c.clip_id));
    }
    c
}

fn build(layout: &[(usize, bool, Vec<u8>)]) -> Manifest {
    let mut m = Manifest::new();
    for (i, (n, game, flavours)) in layout.iter().enumerate() {
        let v = video(i, *n, *game);
        for (k, f) in flavours.iter().take(*n).enumerate() {
            m.insert_clip(clip(&v, k, *f)).unwrap();
        }
        m.insert_video(v).unwrap();
    }
    m
}

proptest! {
    #[test]
    fn load_save_is_identity_for_any_line_order(
        layout in prop::collection::vec((1usize..5, any::<bool>(), prop::collection::vec(0u8..16, 5)), 0..6),
        seed in any::<u64>(),
    ) {
        let m = build(&layout);
        let bytes = manifest_to_bytes(&m);
        let text = String::from_utf8(bytes.clone()).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let header = lines.remove(0);
        // deterministic shuffle of the record lines
        let mut s = seed;
        for i in (1..lines.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            lines.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled = format!("{header}\n{}\n", lines.join("\n"));
        let back = parse_manifest(&shuffled, &ValidationRules { real_clip_len: Some(Millis::from_secs(60)) })
            .unwrap()
            .into_strict()
            .unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(manifest_to_bytes(&back), bytes);
    }
}

#[test]
fn save_and_load_through_the_filesystem() {
    let m = build(&[(3, false, vec![1, 2, 4]), (2, true, vec![8, 15])]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/manifest.jsonl");
    save_manifest(&m, &path).unwrap();
    let back = load_manifest(&path).unwrap().into_strict().unwrap();
    assert_eq!(back, m);
    let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}
