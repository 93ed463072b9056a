//! Multi-granularity temporal action proposal generation.
//!
//! The pipeline turns a per-frame feature sequence into ranked temporal
//! proposals at two granularities:
//!
//! - a coarse, anchor-pyramid segment producer ([`spp`]),
//! - a fine, per-frame start/end/middle actionness producer ([`fap`]),
//!
//! both fed by a shared convolutional trunk with factorized bilinear matching
//! ([`basenet`]) over features fused with sinusoidal position embeddings
//! ([`embed`]). At inference the segment proposals are refined by the frame
//! actionness in two stages ([`tba`]) and scored with the usual recall
//! metrics ([`metrics`]).
//!
//! Everything learnable runs on [`seqgrad`], a small reverse-mode engine over
//! `time x channels` matrices. [`harness`] holds the synthetic corpus, file
//! formats, training loop, inference and report emission.

pub mod basenet;
pub mod embed;
pub mod error;
pub mod fap;
pub mod harness;
pub mod metrics;
pub mod params;
pub mod segment;
pub mod seqgrad;
pub mod spp;
pub mod tba;

pub use error::{MggError, Result};
pub use segment::Segment;
