//! Toolkit for developing code-switched speech recognition systems without
//! the acoustic modelling: language-tagged corpus handling, backoff n-gram
//! language models with interpolation, code-switch-aware perplexity, WER
//! scoring with bootstrap significance, and a confidence-thresholded
//! semi-supervised data-selection pipeline driven by pluggable decoders.
//!
//! The crate is organised around the lifecycle of a semi-supervised
//! experiment:
//!
//! - [`corpus`]: language-tagged transcripts, dataset manifests, descriptive
//!   statistics.
//! - [`ngram`]: closed-vocabulary backoff n-gram models (Kneser-Ney /
//!   Witten-Bell), ARPA serialization, EM-fitted linear interpolation,
//!   perplexity.
//! - [`cs_metrics`]: perplexity decomposed into monolingual and switch-point
//!   components.
//! - [`scoring`]: Levenshtein alignment, pooled and per-language WER,
//!   switch-point accuracy metrics, bootstrap significance.
//! - [`semisup`]: multi-decoder transcription, confidence-based language-pair
//!   assignment, threshold filtering, training-manifest composition.
//! - [`decoder_sim`]: a parameterized synthetic decoder/trainer implementing
//!   the pipeline interfaces so the whole loop runs at desk scale.

pub mod corpus;
pub mod cs_metrics;
pub mod decoder_sim;
pub mod ngram;
pub mod scoring;
pub mod semisup;
