//! Job plans for the external transcoder.
//!
//! One JSON line per active clip. The transcoder wrapper cuts
//! `[start_s, end_s)` from the source video, re-encodes it to the video
//! target, muxes 48 kHz AAC audio when `audio.mux` is set and rejects outputs
//! whose PSNR falls below `min_psnr_db`.

use clipcurate_core::manifest::{Manifest, Source, ViewKind};
use clipcurate_core::time::Millis;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoTarget {
    pub width: u32,
    pub height: u32,
    pub fps: u32,
    pub codec: String,
    pub bitrate_kbps: u32,
    pub container: String,
    pub min_psnr_db: f64,
}

impl Default for VideoTarget {
    fn default() -> Self {
        VideoTarget {
            width: 1280,
            height: 720,
            fps: 30,
            codec: "h265".into(),
            bitrate_kbps: 4000,
            container: "mp4".into(),
            min_psnr_db: 35.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AudioTarget {
    pub mux: bool,
    pub codec: String,
    pub sample_rate_hz: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscodeJob {
    pub clip_id: String,
    pub video_id: String,
    pub start_s: Millis,
    pub end_s: Millis,
    pub video: VideoTarget,
    pub audio: AudioTarget,
}

/// Audio is kept only for real walking footage.
pub fn keeps_audio(source: Source, view: ViewKind) -> bool {
    source == Source::Real && view == ViewKind::Walking
}

pub fn emit_transcode_plan(m: &Manifest) -> Vec<TranscodeJob> {
    m.active_clips()
        .map(|c| {
            let v = m.video(&c.video_id).expect("clip parent exists");
            TranscodeJob {
                clip_id: c.clip_id.clone(),
                video_id: c.video_id.clone(),
                start_s: c.start_s,
                end_s: c.end_s,
                video: VideoTarget::default(),
                audio: AudioTarget {
                    mux: keeps_audio(v.source, v.view),
                    codec: "aac".into(),
                    sample_rate_hz: 48_000,
                },
            }
        })
        .collect()
}

pub fn plan_bytes(jobs: &[TranscodeJob]) -> Vec<u8> {
    crate::stage::jsonl(jobs)
}
