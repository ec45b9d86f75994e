//! Resumable execution of the stage graph.
//!
//! Layout under the workspace:
//!
//! ```text
//! stages/<stage>/checkpoint.json
//! stages/<stage>/<output files>
//! cache/<kind>/<key>                (provider cache, when enabled)
//! ```
//!
//! A stage is skipped when its checkpoint records the current input digest
//! and every listed output still hashes to the recorded value. Commits delete
//! the old checkpoint, write outputs through temp files and renames, and
//! write the new checkpoint last, so a checkpoint on disk always describes
//! outputs that exist.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clipcurate_core::manifest::write_atomic;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{subtree_json, PipelineConfig};
use crate::provider::Providers;
use crate::stage::{run_stage, StageContext, StageError, StageName, MANIFEST};

/// Bumped whenever a stage's output for the same inputs may change.
pub const CODE_VERSION: &str = "clipcurate-stages/1";
pub const CHECKPOINT: &str = "checkpoint.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub stage: StageName,
    pub code_version: String,
    pub input_digest: String,
    /// Output manifest file name, relative to the stage directory.
    pub manifest: Option<String>,
    /// SHA-256 of every output file.
    pub outputs: BTreeMap<String, String>,
    pub completed: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("stage {stage}: {source}")]
    Stage {
        stage: StageName,
        #[source]
        source: StageError,
    },
    #[error("stage {stage} needs the outputs of {needs}, which has not completed; run it first")]
    Upstream { stage: StageName, needs: StageName },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Ran,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageOutcome {
    pub stage: StageName,
    pub action: Action,
    pub enabled: bool,
    pub input_digest: String,
    pub seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn stage_dir(&self, stage: StageName) -> PathBuf {
        self.root.join("stages").join(stage.name())
    }

    pub fn checkpoint_path(&self, stage: StageName) -> PathBuf {
        self.stage_dir(stage).join(CHECKPOINT)
    }

    pub fn read_checkpoint(&self, stage: StageName) -> Option<Checkpoint> {
        let bytes = fs::read(self.checkpoint_path(stage)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    /// The checkpoint of a stage, if it claims completion and all its outputs
    /// are present with the recorded hashes.
    pub fn valid_checkpoint(&self, stage: StageName) -> Option<Checkpoint> {
        let cp = self.read_checkpoint(stage)?;
        if !cp.completed || cp.stage != stage || cp.code_version != CODE_VERSION {
            return None;
        }
        let dir = self.stage_dir(stage);
        for (name, hash) in &cp.outputs {
            match fs::read(dir.join(name)) {
                Ok(bytes) if sha256_hex(&bytes) == *hash => {}
                _ => return None,
            }
        }
        Some(cp)
    }

    /// Final manifest of the most downstream completed stage.
    pub fn latest_manifest(&self) -> Option<PathBuf> {
        StageName::ORDER.iter().rev().find_map(|s| {
            let cp = self.valid_checkpoint(*s)?;
            Some(self.stage_dir(*s).join(cp.manifest?))
        })
    }

    fn commit(&self, stage: StageName, digest: &str, files: &[(String, Vec<u8>)]) -> Result<Checkpoint, RunError> {
        let dir = self.stage_dir(stage);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let cp_path = self.checkpoint_path(stage);
        match fs::remove_file(&cp_path) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(io_err(&cp_path)(e)),
        }
        // Leftovers: outputs of an earlier configuration and temp files of an
        // interrupted commit.
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            let name = path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
            if path.is_file() && !files.iter().any(|(f, _)| *f == name) {
                fs::remove_file(&path).map_err(io_err(&path))?;
            }
        }
        let mut outputs = BTreeMap::new();
        for (name, bytes) in files {
            let path = dir.join(name);
            write_atomic(&path, bytes).map_err(io_err(&path))?;
            outputs.insert(name.clone(), sha256_hex(bytes));
        }
        let cp = Checkpoint {
            stage,
            code_version: CODE_VERSION.to_string(),
            input_digest: digest.to_string(),
            manifest: files.iter().any(|(f, _)| f == MANIFEST).then(|| MANIFEST.to_string()),
            outputs,
            completed: true,
        };
        let mut bytes = serde_json::to_vec_pretty(&cp).expect("serializable");
        bytes.push(b'\n');
        write_atomic(&cp_path, &bytes).map_err(io_err(&cp_path))?;
        Ok(cp)
    }
}

pub struct Runner<'a> {
    cfg: &'a PipelineConfig,
    providers: &'a Providers,
    ws: Workspace,
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a PipelineConfig, providers: &'a Providers) -> Self {
        Runner { cfg, providers, ws: Workspace::new(&cfg.workspace) }
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    fn config_subtree(&self, stage: StageName) -> String {
        let c = self.cfg;
        match stage {
            StageName::Collect => String::new(),
            StageName::Segment => subtree_json(&c.segment),
            StageName::Filter => subtree_json(&c.filter),
            StageName::Annotate => subtree_json(&c.vocabulary),
            StageName::Sample => subtree_json(&c.sampling),
            StageName::Report => subtree_json(&c.report),
        }
    }

    /// Content hash of everything a stage's output depends on.
    pub fn input_digest(&self, stage: StageName, upstream: &HashMap<StageName, Checkpoint>) -> Result<String, RunError> {
        let mut h = Sha256::new();
        let mut put = |s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        put(CODE_VERSION);
        put(stage.name());
        put(if self.cfg.stages.enabled(stage) { "enabled" } else { "disabled" });
        put(&self.config_subtree(stage));
        if stage.uses_providers() {
            put(self.providers.identity());
        }
        if stage == StageName::Collect {
            match &self.cfg.input {
                Some(p) => put(&sha256_hex(&fs::read(p).map_err(io_err(p))?)),
                None => put("no input"),
            }
        }
        for dep in stage.inputs() {
            let cp = &upstream[dep];
            put(dep.name());
            for (name, hash) in &cp.outputs {
                put(name);
                put(hash);
            }
        }
        Ok(hex::encode(h.finalize()))
    }

    /// Runs the selected stages in canonical order. Stages outside the
    /// selection are neither run nor checked, but their completed outputs
    /// feed the selected ones.
    pub fn run(&self, selected: &[StageName]) -> Result<Vec<StageOutcome>, RunError> {
        let mut done: HashMap<StageName, Checkpoint> = HashMap::new();
        let mut outcomes = Vec::new();
        for stage in StageName::ORDER {
            if !selected.contains(&stage) {
                continue;
            }
            for dep in stage.inputs() {
                if !done.contains_key(dep) {
                    let cp = self
                        .ws
                        .valid_checkpoint(*dep)
                        .ok_or(RunError::Upstream { stage, needs: *dep })?;
                    done.insert(*dep, cp);
                }
            }
            let started = Instant::now();
            let digest = self.input_digest(stage, &done)?;
            let enabled = self.cfg.stages.enabled(stage);
            let existing = self.ws.valid_checkpoint(stage).filter(|cp| cp.input_digest == digest);
            let (cp, action) = match existing {
                Some(cp) => {
                    log::info!("{stage}: up to date, skipped");
                    (cp, Action::Skipped)
                }
                None => {
                    log::info!("{stage}: running");
                    let ctx = StageContext {
                        cfg: self.cfg,
                        providers: self.providers,
                        input_dirs: stage.inputs().iter().map(|d| (*d, self.ws.stage_dir(*d))).collect(),
                    };
                    let files = run_stage(stage, &ctx).map_err(|source| RunError::Stage { stage, source })?;
                    (self.ws.commit(stage, &digest, &files)?, Action::Ran)
                }
            };
            outcomes.push(StageOutcome {
                stage,
                action,
                enabled,
                input_digest: digest,
                seconds: started.elapsed().as_secs_f64(),
            });
            done.insert(stage, cp);
        }
        Ok(outcomes)
    }

    pub fn run_all(&self) -> Result<Vec<StageOutcome>, RunError> {
        self.run(&StageName::ORDER)
    }
}
