//! Code-switch-aware perplexity decomposition.
//!
//! Every word position of a tagged text is classified as either monolingual
//! (same language as the previous word, or the first word of an utterance)
//! or a switch point (language differs from the previous word). Perplexity
//! restricted to the monolingual positions of one language is that
//! language's monolingual perplexity (MPP); perplexity over switch points is
//! the code-switch perplexity (CPP), the uncertainty of the first word after
//! a switch.
//!
//! Conventions, also flagged in report headers: the first word of each
//! utterance counts as monolingual for its own language; sentence-end
//! positions have no language and are excluded from the decomposition but
//! included in the overall perplexity, so both totals are reported.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{LangTag, Utterance};
use crate::ngram::{score_utterance, LanguageModel, NgramError};

/// Class of one scored word position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PositionClass {
    /// Same language as the preceding word (or utterance-initial).
    Mono(LangTag),
    /// Language differs from the preceding word.
    Switch,
}

/// Classify every word position of one utterance. Total and deterministic;
/// depends only on the utterance itself.
pub fn classify_positions(utt: &Utterance) -> Vec<PositionClass> {
    let mut classes = Vec::with_capacity(utt.tokens.len());
    for (i, tok) in utt.tokens.iter().enumerate() {
        if i > 0 && utt.tokens[i - 1].lang != tok.lang {
            classes.push(PositionClass::Switch);
        } else {
            classes.push(PositionClass::Mono(tok.lang.clone()));
        }
    }
    classes
}

/// One perplexity figure together with the position count behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassPerplexity {
    pub pp: f64,
    pub positions: usize,
}

/// Code-switch-aware perplexity report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsPerplexityReport {
    /// Overall perplexity over all scored positions, including one
    /// sentence-end per utterance.
    pub pp: f64,
    pub n_scored: usize,
    /// Perplexity restricted to word positions (the decomposed set).
    pub pp_words: f64,
    pub n_words: usize,
    /// Monolingual perplexity per language, languages with no monolingual
    /// positions absent.
    pub mpp_per_lang: BTreeMap<LangTag, ClassPerplexity>,
    /// Monolingual perplexity over all languages pooled.
    pub mpp: Option<ClassPerplexity>,
    /// Code-switch perplexity; absent (never a sentinel) when the text has
    /// no switch points.
    pub cpp: Option<ClassPerplexity>,
}

/// Compute the code-switch decomposition of perplexity.
pub fn cs_perplexity<L: LanguageModel + ?Sized>(
    lm: &L,
    utterances: &[Utterance],
) -> Result<CsPerplexityReport, NgramError> {
    let mut total = 0.0;
    let mut n_scored = 0usize;
    let mut word_total = 0.0;
    let mut n_words = 0usize;
    let mut mono_total = 0.0;
    let mut n_mono = 0usize;
    let mut switch_total = 0.0;
    let mut n_switch = 0usize;
    let mut per_lang: BTreeMap<LangTag, (f64, usize)> = BTreeMap::new();

    for u in utterances {
        let Some(score) = score_utterance(lm, u)? else {
            continue;
        };
        total += score.total();
        n_scored += score.n_scored();
        for (class, &lp) in classify_positions(u).iter().zip(&score.word_logprobs) {
            word_total += lp;
            n_words += 1;
            match class {
                PositionClass::Mono(lang) => {
                    mono_total += lp;
                    n_mono += 1;
                    let e = per_lang.entry(lang.clone()).or_insert((0.0, 0));
                    e.0 += lp;
                    e.1 += 1;
                }
                PositionClass::Switch => {
                    switch_total += lp;
                    n_switch += 1;
                }
            }
        }
    }
    if n_scored == 0 {
        return Err(NgramError::EmptyEvalSet);
    }

    let pp_of = |total: f64, n: usize| (-total / n as f64).exp();
    Ok(CsPerplexityReport {
        pp: pp_of(total, n_scored),
        n_scored,
        pp_words: pp_of(word_total, n_words),
        n_words,
        mpp_per_lang: per_lang
            .into_iter()
            .map(|(lang, (t, n))| {
                (
                    lang,
                    ClassPerplexity {
                        pp: pp_of(t, n),
                        positions: n,
                    },
                )
            })
            .collect(),
        mpp: (n_mono > 0).then(|| ClassPerplexity {
            pp: pp_of(mono_total, n_mono),
            positions: n_mono,
        }),
        cpp: (n_switch > 0).then(|| ClassPerplexity {
            pp: pp_of(switch_total, n_switch),
            positions: n_switch,
        }),
    })
}
