//! Transition network analysis of eye-tracking fixation logs.
//!
//! The pipeline runs fixation records through merging and AOI mapping
//! ([`sequence`]), estimates smoothed transition matrices and scanning
//! metrics ([`tna`]), compares groups with Kruskal-Wallis tests ([`stats`])
//! and exports networks and motifs ([`network`]). [`synth`] generates
//! synthetic logs with known transition structure.

pub mod cli;
pub mod error;
pub mod format;
pub mod ingest;
pub mod network;
pub mod pipeline;
pub mod sequence;
pub mod stats;
pub mod synth;
pub mod tna;

pub use error::{Error, Result};
