//! WER and code-switch accuracy scoring with bootstrap significance.
//!
//! The substrate is the minimal-cost Levenshtein alignment of each
//! reference/hypothesis pair ([`align`]); every metric is a ratio of counts
//! read off those alignments and is reported together with its counts.
//! Hypothesis word languages are looked up in the closed vocabulary;
//! hypothesis words outside it count as language `und` and are therefore
//! never language-correct.

mod align;
mod bootstrap;
mod switch;
mod wer;

pub use align::{align, AlignOp, AlignedPair};
pub use bootstrap::{bootstrap, BootstrapResult};
pub use switch::{switch_metrics, token_correct_per_lang, SwitchMetrics};
pub use wer::{wer, wer_per_language, WerCounts};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{LangTag, Utterance};
use crate::ngram::Vocabulary;

/// Errors raised while scoring.
#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("reference set has no tokens")]
    EmptyReference,
    #[error("hypothesis and reference utterance ids differ: {0}")]
    IdMismatch(String),
    #[error("{0}")]
    InvalidInput(String),
}

/// A numerator/denominator pair behind a reported percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rate {
    pub num: u64,
    pub den: u64,
}

impl Rate {
    pub fn pct(&self) -> f64 {
        100.0 * self.num as f64 / self.den as f64
    }
}

/// Full accuracy report: pooled WER, per-language WER, per-language token
/// correct rates and the switch-point metrics.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub overall: WerCounts,
    pub per_lang: BTreeMap<LangTag, WerCounts>,
    pub token_correct: BTreeMap<LangTag, Rate>,
    /// Absent when the references contain no switch points.
    pub switch: Option<SwitchMetrics>,
}

/// Align reference and hypothesis corpora by utterance id. The two sides
/// must cover exactly the same ids; alignment itself runs in parallel.
pub fn align_corpora(
    references: &[Utterance],
    hypotheses: &[Utterance],
) -> Result<Vec<AlignedPair>, ScoringError> {
    let mut hyp_by_id: BTreeMap<&str, &Utterance> = BTreeMap::new();
    for h in hypotheses {
        if hyp_by_id.insert(&h.id, h).is_some() {
            return Err(ScoringError::InvalidInput(format!(
                "duplicate hypothesis id `{}`",
                h.id
            )));
        }
    }
    if references.len() != hypotheses.len() {
        return Err(ScoringError::IdMismatch(format!(
            "{} references vs {} hypotheses",
            references.len(),
            hypotheses.len()
        )));
    }
    let lookups: Vec<(&Utterance, &Utterance)> = references
        .iter()
        .map(|r| {
            hyp_by_id
                .get(r.id.as_str())
                .map(|h| (r, *h))
                .ok_or_else(|| ScoringError::IdMismatch(format!("no hypothesis for `{}`", r.id)))
        })
        .collect::<Result<_, _>>()?;
    Ok(lookups
        .par_iter()
        .map(|(r, h)| {
            let hyp: Vec<String> = h.tokens.iter().map(|t| t.surface.clone()).collect();
            align(&r.id, &r.tokens, &hyp)
        })
        .collect())
}

/// Score aligned pairs into a [`ScoreReport`].
pub fn score(pairs: &[AlignedPair], vocab: &Vocabulary) -> Result<ScoreReport, ScoringError> {
    let overall = wer(pairs)?;
    Ok(ScoreReport {
        overall,
        per_lang: wer_per_language(pairs),
        token_correct: token_correct_per_lang(pairs),
        switch: switch_metrics(pairs, vocab),
    })
}
