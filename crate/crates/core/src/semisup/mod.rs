//! The two-pass semi-supervised loop: multi-decoder transcription,
//! confidence-based language-pair assignment, threshold filtering and
//! training-manifest composition.
//!
//! Each pass trains a transcription model on manual plus out-of-domain plus
//! previously auto-transcribed data, decodes every untranscribed utterance
//! with one decoder per language pair, assigns each utterance to the pair
//! with the highest confidence, optionally filters below the per-pair mean
//! confidence, and emits the retained utterances as an `AutoT@pass`
//! manifest plus transcripts. The recognition model for each pass is
//! composed from manual plus that pass's auto transcriptions only, with no
//! out-of-domain entries.
//!
//! Decoding and training are behind the [`DecoderInterface`] and
//! [`TrainerInterface`] traits: production users can wrap an external
//! system via the line protocol in [`ExternalDecoder`], while tests drive
//! the whole loop with the simulator from [`crate::decoder_sim`].

mod external;
mod pipeline;
mod select;

pub use external::{format_response, parse_response, serve_lines, ExternalDecoder, NoopTrainer};
pub use pipeline::{
    load_corpus, run_pipeline, DecoderBinding, DecoderInterface, ModelRole, PipelineConfig,
    PipelineOutcome, RunRecord, TrainSet, TrainSummary, TrainerInterface,
};
pub use select::{
    assign_all, assign_pair, compute_thresholds, filter_assignment, pass_report, Assignment,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, LangTag, Token, Utterance};

/// Errors raised by selection and pipeline orchestration.
#[derive(Debug, Error)]
pub enum SemisupError {
    #[error("no decode results for utterance")]
    NoResults,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("decoder protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Identifier of a bilingual decoder's language combination, e.g. `EZ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairId(String);

impl PairId {
    pub fn new(id: &str) -> Result<Self, SemisupError> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(SemisupError::Config(format!("invalid pair id `{id}`")));
        }
        Ok(PairId(id.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One language pair: an id plus its ordered language tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub id: PairId,
    pub langs: (LangTag, LangTag),
}

/// The declared set of language pairs. Declaration order is significant: it
/// breaks confidence ties during assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRegistry {
    pairs: Vec<PairSpec>,
}

impl PairRegistry {
    pub fn new(pairs: Vec<PairSpec>) -> Result<Self, SemisupError> {
        if pairs.is_empty() {
            return Err(SemisupError::Config("no language pairs declared".into()));
        }
        for (i, p) in pairs.iter().enumerate() {
            if pairs[..i].iter().any(|q| q.id == p.id) {
                return Err(SemisupError::Config(format!(
                    "duplicate pair id `{}`",
                    p.id
                )));
            }
        }
        Ok(PairRegistry { pairs })
    }

    pub fn pairs(&self) -> &[PairSpec] {
        &self.pairs
    }

    pub fn get(&self, id: &PairId) -> Option<&PairSpec> {
        self.pairs.iter().find(|p| &p.id == id)
    }

    pub fn position(&self, id: &PairId) -> Option<usize> {
        self.pairs.iter().position(|p| &p.id == id)
    }

    /// The first declared pair whose languages cover every language of the
    /// utterance; `None` when no pair covers them.
    pub fn covering_pair(&self, utt: &Utterance) -> Option<&PairSpec> {
        let langs = utt.languages();
        self.pairs
            .iter()
            .find(|p| langs.iter().all(|l| *l == &p.langs.0 || *l == &p.langs.1))
    }
}

impl Default for PairRegistry {
    /// English paired with isiZulu, isiXhosa, Sesotho and Setswana, in that
    /// order.
    fn default() -> Self {
        let pair = |id: &str, a: &str, b: &str| PairSpec {
            id: PairId::new(id).expect("static pair id"),
            langs: (
                LangTag::new(a).expect("static lang"),
                LangTag::new(b).expect("static lang"),
            ),
        };
        PairRegistry {
            pairs: vec![
                pair("EZ", "en", "zu"),
                pair("EX", "en", "xh"),
                pair("ES", "en", "st"),
                pair("ET", "en", "tn"),
            ],
        }
    }
}

/// One decoder's hypothesis for one utterance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeResult {
    pub utt_id: String,
    pub pair: PairId,
    pub hyp_tokens: Vec<Token>,
    pub token_confidences: Vec<f64>,
    utt_confidence: f64,
}

impl DecodeResult {
    /// Build from per-token confidences; the utterance confidence is their
    /// arithmetic mean (0 for an empty hypothesis).
    pub fn new(
        utt_id: &str,
        pair: PairId,
        hyp_tokens: Vec<Token>,
        token_confidences: Vec<f64>,
    ) -> Result<Self, SemisupError> {
        if hyp_tokens.len() != token_confidences.len() {
            return Err(SemisupError::Config(format!(
                "utterance `{utt_id}`: {} tokens but {} confidences",
                hyp_tokens.len(),
                token_confidences.len()
            )));
        }
        if token_confidences
            .iter()
            .any(|c| !c.is_finite() || *c < 0.0 || *c > 1.0)
        {
            return Err(SemisupError::Config(format!(
                "utterance `{utt_id}`: confidences must lie in [0, 1]"
            )));
        }
        let utt_confidence = if token_confidences.is_empty() {
            0.0
        } else {
            token_confidences.iter().sum::<f64>() / token_confidences.len() as f64
        };
        Ok(DecodeResult {
            utt_id: utt_id.to_string(),
            pair,
            hyp_tokens,
            token_confidences,
            utt_confidence,
        })
    }

    /// Build from a single utterance-level confidence, as delivered by the
    /// external decoder protocol; every token inherits it. An empty
    /// hypothesis forces confidence 0.
    pub fn from_utt_confidence(
        utt_id: &str,
        pair: PairId,
        hyp_tokens: Vec<Token>,
        confidence: f64,
    ) -> Result<Self, SemisupError> {
        if !confidence.is_finite() || !(0.0..=1.0).contains(&confidence) {
            return Err(SemisupError::Config(format!(
                "utterance `{utt_id}`: confidence {confidence} outside [0, 1]"
            )));
        }
        let confidence = if hyp_tokens.is_empty() {
            0.0
        } else {
            confidence
        };
        let n = hyp_tokens.len();
        Ok(DecodeResult {
            utt_id: utt_id.to_string(),
            pair,
            hyp_tokens,
            token_confidences: vec![confidence; n],
            utt_confidence: confidence,
        })
    }

    pub fn utt_confidence(&self) -> f64 {
        self.utt_confidence
    }

    /// Serialize as one JSON line of the decode-dump format.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("decode result serializes")
    }

    /// Parse one JSON line of the decode-dump format, re-validating the
    /// confidence invariant.
    pub fn from_json_line(line: &str) -> Result<Self, SemisupError> {
        #[derive(Deserialize)]
        struct Raw {
            utt_id: String,
            pair: PairId,
            hyp_tokens: Vec<Token>,
            token_confidences: Vec<f64>,
            utt_confidence: f64,
        }
        let raw: Raw = serde_json::from_str(line)?;
        let built =
            DecodeResult::new(&raw.utt_id, raw.pair, raw.hyp_tokens, raw.token_confidences)?;
        if (built.utt_confidence - raw.utt_confidence).abs() > 1e-9 {
            return Err(SemisupError::Config(format!(
                "utterance `{}`: stored confidence {} is not the mean of the token confidences",
                built.utt_id, raw.utt_confidence
            )));
        }
        Ok(built)
    }
}

/// When confidence filtering applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdPolicy {
    /// Never filter.
    #[serde(rename = "nt")]
    NoThreshold,
    /// Filter in pass 1 only.
    #[serde(rename = "tp1")]
    ThresholdPass1,
    /// Filter in every pass.
    #[serde(rename = "tp1p2")]
    ThresholdAllPasses,
}

impl ThresholdPolicy {
    pub fn filter_active(&self, pass: u32) -> bool {
        match self {
            ThresholdPolicy::NoThreshold => false,
            ThresholdPolicy::ThresholdPass1 => pass == 1,
            ThresholdPolicy::ThresholdAllPasses => true,
        }
    }
}

impl fmt::Display for ThresholdPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdPolicy::NoThreshold => f.write_str("NT"),
            ThresholdPolicy::ThresholdPass1 => f.write_str("T_P1"),
            ThresholdPolicy::ThresholdAllPasses => f.write_str("T_P1P2"),
        }
    }
}

impl FromStr for ThresholdPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nt" => Ok(ThresholdPolicy::NoThreshold),
            "tp1" | "t_p1" => Ok(ThresholdPolicy::ThresholdPass1),
            "tp1p2" | "t_p1p2" => Ok(ThresholdPolicy::ThresholdAllPasses),
            other => Err(format!("unknown threshold policy `{other}`")),
        }
    }
}

/// Selection outcome for one pair in one pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub pair: PairId,
    pub assigned: usize,
    pub retained: usize,
    /// Mean assigned confidence; absent when nothing was assigned.
    pub threshold: Option<f64>,
    pub retained_duration_s: f64,
}

/// Full report of one pass. Pair rows keep the registry's declared order,
/// which is also the report column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassReport {
    pub pass: u32,
    pub policy: ThresholdPolicy,
    pub filter_active: bool,
    pub pairs: Vec<PairRow>,
    pub total_assigned: usize,
    pub total_retained: usize,
    pub total_retained_duration_s: f64,
    /// Sizes of the two training sets composed in this pass.
    pub transcriber_trainset: usize,
    pub recognizer_trainset: usize,
    /// Backend training summaries, in the order transcriber, recognizer.
    pub train_summaries: Vec<serde_json::Value>,
}

impl PassReport {
    pub fn pair_row(&self, pair: &PairId) -> Option<&PairRow> {
        self.pairs.iter().find(|r| &r.pair == pair)
    }
}
