//! Question-centric multimodal interview screening.
//!
//! The crate turns clinical-style interview transcripts (or synthetic
//! stand-ins) into fixed 85-slot question-aligned feature matrices for
//! audio, visual, and text modalities, trains a cross-modal attention
//! classifier on them, and reports metrics, ablations, and attention
//! summaries.
//!
//! Module map:
//! - [`taxonomy`]: the canonical 85-question list and extensions.
//! - [`structuring`]: transcript segmentation, follow-up chains, slot layout.
//! - [`features`]: per-modality feature extraction, synthetic corpora, caching.
//! - [`model`]: projection, question-aware and cross-modal attention, head.
//! - [`training`]: splits, minority augmentation, optimizer loop, checkpoints.
//! - [`evaluation`]: metrics, ablation sweeps, attention-mass reports.

pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod model;
pub mod structuring;
pub mod taxonomy;
pub mod training;
pub mod textnorm;

pub use error::{Error, Result};
