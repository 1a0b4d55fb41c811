//! Spatio-semantic graphs from Cookie Theft picture descriptions.
//!
//! Transcripts (CHAT or plain text) are normalized, scanned for Content
//! Information Units, laid out as a walk over picture coordinates, reduced
//! to twelve graph features, and compared between groups with ANCOVA.

pub mod cli;
pub mod error;
pub mod features;
pub mod graph;
pub mod ingest;
pub mod lexicon;
pub mod normalize;
pub mod pipeline;
pub mod render;
pub mod spatial;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use pipeline::{Pipeline, RunConfig};
