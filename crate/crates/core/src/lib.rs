//! Perpetrator-mention detection for episodic crime screenplays.
//!
//! The crate covers the full pipeline: parsing screenplays and SRT captions,
//! aligning dialog to caption timelines with dynamic time warping, extracting
//! per-sentence text/visual/acoustic features, training an incremental
//! fusion+LSTM sequence labeler (plus MLP, CRF and pronoun-rule baselines),
//! and scoring predictions with minority-class and incremental metrics.
//! A deterministic synthetic-episode generator makes every training claim
//! verifiable at desk scale.

pub mod align;
pub mod baselines;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod nn;
pub mod signal;
pub mod synthgen;

pub mod cli;

pub use error::{Error, Result};
