//! Descriptive corpus statistics: per-language monolingual and code-switched
//! durations, token and type counts.
//!
//! Attribution rules (also documented in report headers):
//! - a code-switched utterance's full duration is credited to the CS column
//!   of every language present in it;
//! - a monolingual utterance's duration is credited to its language's mono
//!   column;
//! - tokens are attributed to their own language; types are distinct NFC
//!   surface forms counted per language, case-sensitively;
//! - untranscribed utterances contribute duration only when
//!   [`StatsOptions::include_untranscribed`] is set;
//! - the totals row is the column-wise sum over languages, so CS minutes may
//!   count a multi-language utterance more than once.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use unicode_normalization::UnicodeNormalization;

use super::{Corpus, CorpusError, LangTag, Manifest};

/// Options for [`Corpus::stats`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StatsOptions {
    /// Count the duration of utterances with no transcript.
    pub include_untranscribed: bool,
}

/// One per-language row of the statistics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LangRow {
    pub lang: LangTag,
    pub mono_s: f64,
    pub cs_s: f64,
    pub tokens: u64,
    pub types: u64,
}

impl LangRow {
    pub fn subtotal_s(&self) -> f64 {
        self.mono_s + self.cs_s
    }

    fn zero(lang: LangTag) -> Self {
        LangRow {
            lang,
            mono_s: 0.0,
            cs_s: 0.0,
            tokens: 0,
            types: 0,
        }
    }
}

/// Corpus statistics over a manifest split (or a whole corpus).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    /// Per-language rows in registry order; languages with no data are kept
    /// with zero rows so table layouts stay stable.
    pub rows: Vec<LangRow>,
    /// Total duration of untranscribed utterances, when counted.
    pub untranscribed_s: Option<f64>,
    /// Column-wise sums over `rows` (plus `untranscribed_s` for duration).
    pub total_mono_s: f64,
    pub total_cs_s: f64,
    pub total_tokens: u64,
    pub total_types: u64,
    pub utterances: usize,
    pub code_switched_utterances: usize,
}

/// Seconds to the minutes figure used in reports, rounded to 0.1.
pub fn minutes(seconds: f64) -> f64 {
    (seconds / 60.0 * 10.0).round() / 10.0
}

impl Corpus {
    /// Compute per-language statistics over `split`, or over the whole
    /// corpus when `split` is `None`. Every manifest id must resolve.
    pub fn stats(
        &self,
        split: Option<&Manifest>,
        opts: StatsOptions,
    ) -> Result<CorpusStats, CorpusError> {
        let utts: Vec<&super::Utterance> = match split {
            Some(m) => self.resolve(m)?.into_iter().map(|(u, _)| u).collect(),
            None => self.utterances().iter().collect(),
        };

        let mut rows: Vec<LangRow> = self
            .languages()
            .iter()
            .map(|l| LangRow::zero(l.clone()))
            .collect();
        let index: HashMap<&LangTag, usize> = self
            .languages()
            .iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        let mut types: HashMap<LangTag, HashSet<String>> = HashMap::new();
        let mut untranscribed_s = 0.0;
        let mut any_untranscribed = false;
        let mut cs_count = 0usize;

        for u in &utts {
            if u.is_untranscribed() {
                any_untranscribed = true;
                if opts.include_untranscribed {
                    untranscribed_s += u.duration_s;
                }
                continue;
            }
            let langs = u.languages();
            if u.is_code_switched() {
                cs_count += 1;
                for l in &langs {
                    rows[index[*l]].cs_s += u.duration_s;
                }
            } else {
                rows[index[langs[0]]].mono_s += u.duration_s;
            }
            for t in &u.tokens {
                rows[index[&t.lang]].tokens += 1;
                types
                    .entry(t.lang.clone())
                    .or_default()
                    .insert(t.surface.nfc().collect());
            }
        }

        for row in &mut rows {
            row.types = types.get(&row.lang).map_or(0, |s| s.len() as u64);
        }

        let total_mono_s = rows.iter().map(|r| r.mono_s).sum();
        let total_cs_s = rows.iter().map(|r| r.cs_s).sum();
        let total_tokens = rows.iter().map(|r| r.tokens).sum();
        let total_types = rows.iter().map(|r| r.types).sum();

        Ok(CorpusStats {
            rows,
            untranscribed_s: (opts.include_untranscribed && any_untranscribed)
                .then_some(untranscribed_s),
            total_mono_s,
            total_cs_s,
            total_tokens,
            total_types,
            utterances: utts.len(),
            code_switched_utterances: cs_count,
        })
    }
}
