//! Phase-aware spoof-speech detection at desk scale.
//!
//! The crate covers the full pipeline: audio and protocol ingestion
//! ([`dataset`]), magnitude/phase feature extraction ([`dsp`]), the per-frame
//! histogram entropy analysis that motivates phase processing ([`entropy`]),
//! unified 400-frame feature maps ([`featmap`]), a small deterministic neural
//! engine with explicit gradients ([`nn`]), the phase network and Res2Net-style
//! fusion models ([`models`]), training and utterance-level evaluation
//! ([`train`]), and EER / min t-DCF scoring ([`metrics`]).
//!
//! Interchangeable algorithm families are registered by name and selected at
//! runtime: feature extractors (`lps`, `cqt`, `lfcc`) in
//! [`dsp::extractor`] and fusion frameworks (`a`, `b`, `c`) in
//! [`models::framework`].

pub mod dataset;
pub mod dsp;
pub mod entropy;
pub mod error;
pub mod featmap;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod train;

pub use error::{Error, Result};

/// Sample rate every pipeline entry point requires, in Hz.
pub const PIPELINE_SAMPLE_RATE: u32 = 16_000;
