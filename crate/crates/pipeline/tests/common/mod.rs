#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use clipcurate::config::SyntheticConfig;
use clipcurate::fixtures::write_fixture_dir;
use clipcurate::provider::synthetic::input_manifest;
use clipcurate::{validate_config, PipelineConfig};
use clipcurate_core::labels::Vocabulary;
use clipcurate_core::manifest::save_manifest;
use clipcurate_core::segment::SegmentConfig;

pub struct Setup {
    pub dir: tempfile::TempDir,
    pub config_path: PathBuf,
    pub cfg: PipelineConfig,
    pub clips: usize,
}

/// Input manifest, fixture directory and configuration in a temp dir.
pub fn fixture_setup(min_clips: usize, seed: u64) -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let (m, clips) = input_manifest(seed, min_clips, &SegmentConfig::default());
    save_manifest(&m, &dir.path().join("in.jsonl")).unwrap();
    let syn = SyntheticConfig { seed, ..Default::default() };
    write_fixture_dir(&dir.path().join("fx"), &m, &syn, &Vocabulary::default(), &SegmentConfig::default()).unwrap();
    let config_path = write_config(
        dir.path(),
        "c.toml",
        "workspace = \"ws\"\ninput = \"in.jsonl\"\n[provider]\nmode = \"fixture\"\nfixture_dir = \"fx\"\n",
    );
    let cfg = validate_config(&config_path).unwrap();
    Setup { dir, config_path, cfg, clips }
}

/// In-process synthetic provider over a generated input manifest.
pub fn synthetic_setup(min_clips: usize, seed: u64) -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let (m, clips) = input_manifest(seed, min_clips, &SegmentConfig::default());
    save_manifest(&m, &dir.path().join("in.jsonl")).unwrap();
    let config_path = write_config(
        dir.path(),
        "c.toml",
        &format!("workspace = \"ws\"\ninput = \"in.jsonl\"\n[provider]\nmode = \"synthetic\"\n[provider.synthetic]\nseed = {seed}\n"),
    );
    let cfg = validate_config(&config_path).unwrap();
    Setup { dir, config_path, cfg, clips }
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Every file under `stages/`, keyed by relative path.
pub fn stage_files(ws: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let root = ws.join("stages");
    let mut dirs: Vec<_> = fs::read_dir(&root).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    for d in dirs {
        let mut files: Vec<_> = fs::read_dir(&d).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        for f in files {
            let rel = f.strip_prefix(&root).unwrap().to_string_lossy().to_string();
            out.push((rel, fs::read(&f).unwrap()));
        }
    }
    out
}
