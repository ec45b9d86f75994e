//! Stage runner, provider clients and job planning around
//! [`clipcurate_core`].
//!
//! A run executes collect, segment, filter, annotate (location matching and
//! labels), sample and report in that order. Each stage writes its outputs
//! and a checkpoint under the workspace; rerunning with unchanged inputs
//! skips it.

pub mod config;
pub mod fixtures;
pub mod provider;
pub mod runner;
pub mod stage;
pub mod transcode;

pub use config::{validate_config, PipelineConfig};
pub use provider::Providers;
pub use runner::{Runner, Workspace};
pub use stage::StageName;
