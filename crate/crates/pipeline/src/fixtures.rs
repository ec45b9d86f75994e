//! Writes fixture directories from the synthetic provider.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clipcurate_core::labels::Vocabulary;
use clipcurate_core::manifest::Manifest;
use clipcurate_core::segment::{segment_video, SegmentConfig};

use crate::config::SyntheticConfig;
use crate::provider::synthetic::SyntheticBackend;
use crate::provider::{encode, Kind, Subject};

fn write_line(out: &mut impl Write, reference: &str, payload: &[u8]) -> io::Result<()> {
    out.write_all(b"{\"ref\":")?;
    serde_json::to_writer(&mut *out, reference)?;
    out.write_all(b",\"payload\":")?;
    out.write_all(payload)?;
    out.write_all(b"}\n")
}

/// Fixture files answering every request a run over `videos` will make.
/// Clip ids come from segmenting with `seg`, so the pipeline must use the
/// same segment settings.
pub fn write_fixture_dir(
    dir: &Path,
    videos: &Manifest,
    cfg: &SyntheticConfig,
    vocabulary: &Vocabulary,
    seg: &SegmentConfig,
) -> io::Result<usize> {
    let backend = SyntheticBackend::new(cfg.clone(), vocabulary.clone());
    fs::create_dir_all(dir.join("pose"))?;
    fs::create_dir_all(dir.join("chapters"))?;
    let json_kinds = [Kind::Transition, Kind::Luma, Kind::Subtitle, Kind::Quality, Kind::Embedding, Kind::Category, Kind::Caption];
    let mut files = HashMap::new();
    for k in json_kinds {
        files.insert(k, io::BufWriter::new(fs::File::create(dir.join(format!("{}.jsonl", k.name())))?));
    }
    let mut clips = 0;
    for v in videos.videos() {
        let subject = Subject::Video(v);
        let chapters = encode(&backend.payload(Kind::Chapters, &subject));
        fs::write(dir.join("chapters").join(format!("{}.txt", v.video_id)), chapters)?;
        let series = backend.payload(Kind::Transition, &subject);
        write_line(files.get_mut(&Kind::Transition).expect("opened"), &v.video_id, &encode(&series))?;
        let crate::provider::Payload::Transition(series) = series else { unreachable!() };
        for c in segment_video(v, &series, seg).unwrap_or_default() {
            let subject = Subject::Clip { clip: &c, video: v };
            for k in [Kind::Luma, Kind::Subtitle, Kind::Quality, Kind::Embedding, Kind::Category, Kind::Caption] {
                write_line(files.get_mut(&k).expect("opened"), &c.clip_id, &encode(&backend.payload(k, &subject)))?;
            }
            fs::write(dir.join("pose").join(format!("{}.traj", c.clip_id)), encode(&backend.payload(Kind::Pose, &subject)))?;
            clips += 1;
        }
    }
    for f in files.values_mut() {
        f.flush()?;
    }
    Ok(clips)
}
