//! Filesystem fixtures.
//!
//! ```text
//! <dir>/<kind>.jsonl          {"ref": "<id>", "payload": <json>} per line
//! <dir>/pose/<clip_id>.traj   trajectory text
//! <dir>/chapters/<video_id>.txt
//! ```
//!
//! JSON payloads are returned exactly as they appear in the file.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::Deserialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use super::{Backend, Kind, ProviderError, Raw, Subject};

type Index = HashMap<String, Box<RawValue>>;

pub struct FixtureBackend {
    dir: PathBuf,
    identity: String,
    indexes: HashMap<Kind, OnceLock<Result<Index, String>>>,
}

#[derive(Deserialize)]
struct Line {
    #[serde(rename = "ref")]
    reference: String,
    payload: Box<RawValue>,
}

impl FixtureBackend {
    pub fn open(dir: &Path) -> Result<Self, ProviderError> {
        if !dir.is_dir() {
            return Err(ProviderError::Setup(format!("fixture directory {} does not exist", dir.display())));
        }
        let identity = content_hash(dir).map_err(|e| ProviderError::Setup(format!("{}: {e}", dir.display())))?;
        let indexes = Kind::ALL.iter().filter(|k| !k.is_text()).map(|k| (*k, OnceLock::new())).collect();
        Ok(FixtureBackend { dir: dir.to_path_buf(), identity: format!("fixture:{identity}"), indexes })
    }

    fn index(&self, kind: Kind) -> Result<&Index, ProviderError> {
        let cell = &self.indexes[&kind];
        cell.get_or_init(|| load_index(&self.dir.join(format!("{}.jsonl", kind.name()))))
            .as_ref()
            .map_err(|e| ProviderError::Setup(e.clone()))
    }
}

fn load_index(path: &Path) -> Result<Index, String> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Index::new()),
        Err(e) => return Err(format!("{}: {e}", path.display())),
    };
    let mut index = Index::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(line).map_err(|e| format!("{} line {}: {e}", path.display(), i + 1))?;
        if index.insert(l.reference.clone(), l.payload).is_some() {
            return Err(format!("{} line {}: duplicate ref {:?}", path.display(), i + 1, l.reference));
        }
    }
    Ok(index)
}

/// References become file names, so only a conservative character set is allowed.
fn safe_name(reference: &str) -> bool {
    !reference.is_empty()
        && !reference.starts_with('.')
        && reference.bytes().all(|b| b.is_ascii_alphanumeric() || b"-_.".contains(&b))
}

fn content_hash(dir: &Path) -> std::io::Result<String> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push(path);
            }
        }
    }
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(dir).unwrap_or(&f).to_string_lossy().replace('\\', "/");
        let bytes = fs::read(&f)?;
        h.update((rel.len() as u64).to_le_bytes());
        h.update(rel.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

impl Backend for FixtureBackend {
    fn identity(&self) -> String {
        self.identity.clone()
    }

    fn fetch(&self, kind: Kind, subject: &Subject<'_>) -> Result<Raw, ProviderError> {
        let reference = subject.reference();
        let missing = |detail: String| ProviderError::Missing { kind, reference: reference.to_string(), detail };
        if kind.is_text() {
            if !safe_name(reference) {
                return Err(missing(format!("reference {reference:?} is not a valid file name")));
            }
            let path = match kind {
                Kind::Pose => self.dir.join("pose").join(format!("{reference}.traj")),
                _ => self.dir.join("chapters").join(format!("{reference}.txt")),
            };
            return fs::read(&path).map(Raw::Bytes).map_err(|e| missing(format!("{}: {e}", path.display())));
        }
        match self.index(kind)?.get(reference) {
            Some(raw) => Ok(Raw::Bytes(raw.get().as_bytes().to_vec())),
            None => Err(missing(format!("no entry in {}.jsonl", kind.name()))),
        }
    }
}
