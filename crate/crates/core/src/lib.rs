//! Curation of large video corpora into training clips.
//!
//! The crate covers the deterministic parts of the pipeline: the clip
//! manifest, shot segmentation and clip extraction, the filter cascade,
//! camera-trajectory analytics, chapter-based location matching, the
//! five-stage diversity sampler and corpus statistics. Model inference is
//! out of scope; its outputs arrive as plain data.

pub mod filter;
pub mod interval_tree;
pub mod labels;
pub mod location;
pub mod manifest;
pub mod par;
pub mod sampling;
pub mod segment;
pub mod stats;
pub mod synth;
pub mod time;
pub mod trajectory;
