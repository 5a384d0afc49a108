//! Perplexity evaluation.
//!
//! Scored positions are all words plus one sentence-end per utterance; the
//! sentence-begin marker is context only. Utterances with no tokens are
//! skipped entirely.

use super::{LanguageModel, NgramError, BOS, EOS};
use crate::corpus::Utterance;

/// Perplexity of a text under a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perplexity {
    pub pp: f64,
    pub n_scored: usize,
    pub total_logprob: f64,
}

/// Log-probabilities of one utterance's scored positions.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceScore {
    /// One natural-log probability per word, in token order.
    pub word_logprobs: Vec<f64>,
    /// The sentence-end position.
    pub eos_logprob: f64,
}

impl UtteranceScore {
    pub fn total(&self) -> f64 {
        self.word_logprobs.iter().sum::<f64>() + self.eos_logprob
    }

    pub fn n_scored(&self) -> usize {
        self.word_logprobs.len() + 1
    }
}

/// Score every position of one utterance. Returns `None` for untranscribed
/// (empty) utterances.
pub fn score_utterance<L: LanguageModel + ?Sized>(
    lm: &L,
    utt: &Utterance,
) -> Result<Option<UtteranceScore>, NgramError> {
    if utt.tokens.is_empty() {
        return Ok(None);
    }
    let mut history: Vec<&str> = Vec::with_capacity(utt.tokens.len() + 1);
    history.push(BOS);
    let mut word_logprobs = Vec::with_capacity(utt.tokens.len());
    for t in &utt.tokens {
        word_logprobs.push(lm.logprob(&history, &t.surface)?);
        history.push(&t.surface);
    }
    let eos_logprob = lm.logprob(&history, EOS)?;
    Ok(Some(UtteranceScore {
        word_logprobs,
        eos_logprob,
    }))
}

/// Perplexity over a list of utterances: `exp(-total_logprob / n_scored)`.
pub fn perplexity<L: LanguageModel + ?Sized>(
    lm: &L,
    utterances: &[Utterance],
) -> Result<Perplexity, NgramError> {
    let mut total = 0.0;
    let mut n = 0usize;
    for u in utterances {
        if let Some(score) = score_utterance(lm, u)? {
            total += score.total();
            n += score.n_scored();
        }
    }
    if n == 0 {
        return Err(NgramError::EmptyEvalSet);
    }
    Ok(Perplexity {
        pp: (-total / n as f64).exp(),
        n_scored: n,
        total_logprob: total,
    })
}
