//! Word error rate, pooled and per language.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::LangTag;

use super::{AlignOp, AlignedPair, ScoringError};

/// Substitution/deletion/insertion counts against a reference length.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WerCounts {
    pub sub: u64,
    pub del: u64,
    pub ins: u64,
    pub n_ref: u64,
}

impl WerCounts {
    pub fn errors(&self) -> u64 {
        self.sub + self.del + self.ins
    }

    /// `100 * (S + D + I) / N`.
    pub fn wer_pct(&self) -> f64 {
        100.0 * self.errors() as f64 / self.n_ref as f64
    }

    fn absorb(&mut self, other: &WerCounts) {
        self.sub += other.sub;
        self.del += other.del;
        self.ins += other.ins;
        self.n_ref += other.n_ref;
    }
}

/// Pooled WER over utterances: error and reference counts are summed before
/// dividing, never averaged per utterance.
pub fn wer(pairs: &[AlignedPair]) -> Result<WerCounts, ScoringError> {
    let mut total = WerCounts::default();
    for p in pairs {
        let (s, d, i, n) = p.counts();
        total.absorb(&WerCounts {
            sub: s,
            del: d,
            ins: i,
            n_ref: n,
        });
    }
    if total.n_ref == 0 {
        return Err(ScoringError::EmptyReference);
    }
    Ok(total)
}

/// Per-language error attribution. Substitutions and deletions go to the
/// reference token's language; an insertion goes to the language of the
/// nearest preceding reference token in the alignment (the first reference
/// token's language when the insertion precedes all of them, `und` when the
/// reference is empty). The attribution partitions the pooled counts.
pub fn wer_per_language(pairs: &[AlignedPair]) -> BTreeMap<LangTag, WerCounts> {
    let mut per_lang: BTreeMap<LangTag, WerCounts> = BTreeMap::new();
    for p in pairs {
        let first_ref_lang = p
            .ops
            .iter()
            .filter_map(AlignOp::ref_token)
            .map(|t| t.lang.clone())
            .next()
            .unwrap_or_else(LangTag::unknown);
        let mut current = first_ref_lang;
        for op in &p.ops {
            match op {
                AlignOp::Match { r, .. } => {
                    per_lang.entry(r.lang.clone()).or_default().n_ref += 1;
                    current = r.lang.clone();
                }
                AlignOp::Sub { r, .. } => {
                    let e = per_lang.entry(r.lang.clone()).or_default();
                    e.sub += 1;
                    e.n_ref += 1;
                    current = r.lang.clone();
                }
                AlignOp::Del { r } => {
                    let e = per_lang.entry(r.lang.clone()).or_default();
                    e.del += 1;
                    e.n_ref += 1;
                    current = r.lang.clone();
                }
                AlignOp::Ins { .. } => {
                    per_lang.entry(current.clone()).or_default().ins += 1;
                }
            }
        }
    }
    per_lang
}
