//! Accuracy at and around code-switch points.
//!
//! A switch point is a reference position whose language differs from the
//! preceding reference token's language. "Correct" is recall-style: the
//! alignment op at the reference position is a match.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::LangTag;
use crate::ngram::Vocabulary;

use super::{AlignOp, AlignedPair, Rate};

/// Switch-point accuracy metrics with the counts behind every rate.
#[derive(Debug, Clone, Serialize)]
pub struct SwitchMetrics {
    pub switch_points: u64,
    /// Switch positions whose aligned op is a match.
    pub word_correct: Rate,
    /// As `word_correct`, restricted to switch positions whose reference
    /// token is in the given language.
    pub word_correct_per_lang: BTreeMap<LangTag, Rate>,
    /// Switch positions where a hypothesis token is aligned (match or
    /// substitution) and its vocabulary language equals the reference
    /// token's; deletions count as wrong.
    pub lang_correct: Rate,
    /// Switch points where both words of the switch bigram are matches.
    pub bigram_correct: Rate,
}

/// Ops carrying a reference token, in reference order.
fn ref_positions(pair: &AlignedPair) -> Vec<&AlignOp> {
    pair.ops
        .iter()
        .filter(|op| op.ref_token().is_some())
        .collect()
}

/// Compute switch metrics over aligned pairs; `None` when the references
/// contain no switch points. Hypothesis languages come from `vocab`;
/// out-of-vocabulary hypothesis words count as language `und`.
pub fn switch_metrics(pairs: &[AlignedPair], vocab: &Vocabulary) -> Option<SwitchMetrics> {
    let mut switch_points = 0u64;
    let mut word_ok = 0u64;
    let mut per_lang: BTreeMap<LangTag, Rate> = BTreeMap::new();
    let mut lang_ok = 0u64;
    let mut bigram_ok = 0u64;

    let unknown = LangTag::unknown();
    for pair in pairs {
        let ops = ref_positions(pair);
        for i in 1..ops.len() {
            let prev = ops[i - 1].ref_token().expect("ref position");
            let cur = ops[i].ref_token().expect("ref position");
            if prev.lang == cur.lang {
                continue;
            }
            switch_points += 1;
            let entry = per_lang
                .entry(cur.lang.clone())
                .or_insert(Rate { num: 0, den: 0 });
            entry.den += 1;
            if ops[i].is_match() {
                word_ok += 1;
                entry.num += 1;
            }
            if let Some(h) = ops[i].hyp_surface() {
                let hyp_lang = vocab.lang_of(h).unwrap_or(&unknown);
                if hyp_lang == &cur.lang {
                    lang_ok += 1;
                }
            }
            if ops[i - 1].is_match() && ops[i].is_match() {
                bigram_ok += 1;
            }
        }
    }
    if switch_points == 0 {
        return None;
    }
    Some(SwitchMetrics {
        switch_points,
        word_correct: Rate {
            num: word_ok,
            den: switch_points,
        },
        word_correct_per_lang: per_lang,
        lang_correct: Rate {
            num: lang_ok,
            den: switch_points,
        },
        bigram_correct: Rate {
            num: bigram_ok,
            den: switch_points,
        },
    })
}

/// Per-language token-correct rates over all reference positions: the
/// fraction of reference tokens of each language whose aligned op is a
/// match.
pub fn token_correct_per_lang(pairs: &[AlignedPair]) -> BTreeMap<LangTag, Rate> {
    let mut per_lang: BTreeMap<LangTag, Rate> = BTreeMap::new();
    for pair in pairs {
        for op in &pair.ops {
            if let Some(t) = op.ref_token() {
                let e = per_lang
                    .entry(t.lang.clone())
                    .or_insert(Rate { num: 0, den: 0 });
                e.den += 1;
                if op.is_match() {
                    e.num += 1;
                }
            }
        }
    }
    per_lang
}
