//! Closed-vocabulary backoff n-gram language models.
//!
//! Models are trained with interpolated modified Kneser-Ney or Witten-Bell
//! smoothing ([`train`]), serialized in the standard ARPA text format
//! ([`read_arpa`] / [`write_arpa`]), linearly interpolated with EM-fitted
//! weights ([`fit_weights`]), and queried through the [`LanguageModel`]
//! trait. Log-probabilities are natural-log internally; ARPA I/O converts
//! to and from log10.
//!
//! The vocabulary is closed: every word queried at scoring time must be
//! present, and queries outside it are hard errors. Words never seen in
//! training still receive positive probability through the smoothing floor.

mod arpa;
mod eval;
mod mixture;
mod train;

pub use arpa::{read_arpa, write_arpa};
pub use eval::{perplexity, score_utterance, Perplexity, UtteranceScore};
pub use mixture::{fit_weights, FitReport, MixtureLM};
pub use train::{train, Smoothing, TrainConfig};

use std::collections::HashMap;
use std::io::{BufRead, Write};

use indexmap::IndexSet;
use thiserror::Error;

use crate::corpus::{CorpusError, LangTag, Utterance};

/// Sentence-begin marker; context only, never predicted.
pub const BOS: &str = "<s>";
/// Sentence-end marker; scored once per utterance.
pub const EOS: &str = "</s>";

/// Dummy log-probability stored for the sentence-begin symbol, following the
/// ARPA convention of -99 in log10.
pub(crate) const BOS_DUMMY_LN: f64 = -99.0 * std::f64::consts::LN_10;

const BOS_ID: u32 = 0;
const EOS_ID: u32 = 1;

/// Errors raised by language-model training, querying and serialization.
#[derive(Debug, Error)]
pub enum NgramError {
    #[error("training token `{0}` is outside the closed vocabulary")]
    OovInTraining(String),
    #[error("queried word `{0}` is outside the closed vocabulary")]
    OovQuery(String),
    #[error("insufficient data for the requested smoothing: {0}")]
    InsufficientData(String),
    #[error("evaluation set has no scored positions")]
    EmptyEvalSet,
    #[error("mixture components must share one vocabulary")]
    VocabMismatch,
    #[error("n-gram order {0} is outside the supported range 1..=5")]
    InvalidOrder(usize),
    #[error("{0}")]
    InvalidInput(String),
    #[error("ARPA format error at line {line}: {reason}")]
    ArpaFormat { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An ordered closed vocabulary mapping each surface form to its language.
///
/// The sentence markers [`BOS`] and [`EOS`] are implicit and carry no
/// language; they cannot be inserted as words.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: IndexSet<String>,
    langs: Vec<LangTag>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Vocabulary {
            words: IndexSet::new(),
            langs: Vec::new(),
        }
    }

    /// Insert a word; re-inserting an existing word is a no-op that keeps
    /// the original language.
    pub fn insert(&mut self, word: &str, lang: LangTag) -> Result<(), NgramError> {
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(NgramError::InvalidInput(format!(
                "invalid vocabulary word `{word}`"
            )));
        }
        if word == BOS || word == EOS {
            return Err(NgramError::InvalidInput(format!(
                "`{word}` is a reserved sentence marker"
            )));
        }
        if self.words.insert(word.to_string()) {
            self.langs.push(lang);
        }
        Ok(())
    }

    /// Build a vocabulary from language-tagged utterances. A surface form
    /// seen under several languages is assigned its most frequent one (ties
    /// go to the first seen), keeping the word-to-language map total.
    pub fn from_utterances<'a>(utts: impl IntoIterator<Item = &'a Utterance>) -> Self {
        let mut order: IndexSet<String> = IndexSet::new();
        let mut votes: HashMap<String, Vec<(LangTag, u64)>> = HashMap::new();
        for u in utts {
            for t in &u.tokens {
                order.insert(t.surface.clone());
                let entry = votes.entry(t.surface.clone()).or_default();
                match entry.iter_mut().find(|(l, _)| l == &t.lang) {
                    Some((_, n)) => *n += 1,
                    None => entry.push((t.lang.clone(), 1)),
                }
            }
        }
        let mut vocab = Vocabulary::new();
        for w in &order {
            let counts = &votes[w];
            let best = counts
                .iter()
                .max_by_key(|(_, n)| *n)
                .expect("word has at least one vote")
                .clone();
            vocab
                .insert(w, best.0)
                .expect("corpus tokens are valid vocabulary words");
        }
        vocab
    }

    /// Number of words, excluding the sentence markers.
    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Number of predictable symbols: all words plus the sentence-end marker.
    pub fn predictable_count(&self) -> usize {
        self.words.len() + 1
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn lang_of(&self, word: &str) -> Option<&LangTag> {
        self.words.get_index_of(word).map(|i| &self.langs[i])
    }

    /// Words with their languages, in insertion order.
    pub fn words(&self) -> impl Iterator<Item = (&str, &LangTag)> {
        self.words
            .iter()
            .zip(self.langs.iter())
            .map(|(w, l)| (w.as_str(), l))
    }

    fn sym_id(&self, s: &str) -> Option<u32> {
        match s {
            BOS => Some(BOS_ID),
            EOS => Some(EOS_ID),
            w => self.words.get_index_of(w).map(|i| (i + 2) as u32),
        }
    }

    fn sym(&self, id: u32) -> &str {
        match id {
            BOS_ID => BOS,
            EOS_ID => EOS,
            i => self
                .words
                .get_index(i as usize - 2)
                .expect("symbol id within vocabulary"),
        }
    }

    /// Ids of all predictable symbols: every word, then the end marker.
    fn predictable_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.words.len() as u32)
            .map(|i| i + 2)
            .chain(std::iter::once(EOS_ID))
    }

    /// Read the `word<TAB>lang` vocabulary file format.
    pub fn read(reader: impl BufRead) -> Result<Self, NgramError> {
        let mut vocab = Vocabulary::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (word, lang) = trimmed.split_once('\t').ok_or_else(|| {
                NgramError::InvalidInput(format!(
                    "vocabulary line {}: expected `word<TAB>lang`",
                    idx + 1
                ))
            })?;
            let tag = LangTag::new(lang.trim()).map_err(NgramError::InvalidInput)?;
            vocab.insert(word, tag)?;
        }
        Ok(vocab)
    }

    pub fn write(&self, mut w: impl Write) -> Result<(), NgramError> {
        for (word, lang) in self.words() {
            writeln!(w, "{word}\t{lang}")?;
        }
        Ok(())
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words.len() == other.words.len()
            && self.words().all(|(w, l)| other.lang_of(w) == Some(l))
    }
}

/// A read-only conditional word distribution over a closed vocabulary.
///
/// Implemented by [`NGramModel`] and [`MixtureLM`]; scoring utilities are
/// generic over it. Returned log-probabilities are natural-log, finite and
/// non-positive for any in-vocabulary query.
pub trait LanguageModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    /// log P(word | context); `context` is the preceding words, oldest
    /// first. Longer histories than the model order are truncated.
    fn logprob(&self, context: &[&str], word: &str) -> Result<f64, NgramError>;
}

impl<L: LanguageModel + ?Sized> LanguageModel for Box<L> {
    fn vocab(&self) -> &Vocabulary {
        (**self).vocab()
    }

    fn logprob(&self, context: &[&str], word: &str) -> Result<f64, NgramError> {
        (**self).logprob(context, word)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Entry {
    pub logp: f64,
    pub bow: Option<f64>,
}

/// A backoff n-gram model: stored log-probabilities for observed n-grams,
/// backoff weights for contexts, and the standard backoff recursion for
/// everything else.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    /// `levels[k-1]` holds the k-gram table.
    levels: Vec<HashMap<Box<[u32]>, Entry>>,
    smoothing: Smoothing,
}

impl NGramModel {
    pub(crate) fn from_parts(
        order: usize,
        vocab: Vocabulary,
        levels: Vec<HashMap<Box<[u32]>, Entry>>,
        smoothing: Smoothing,
    ) -> Self {
        NGramModel {
            order,
            vocab,
            levels,
            smoothing,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The smoothing that actually produced the model (after any automatic
    /// fallback).
    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Number of stored n-grams at each order, 1-grams first.
    pub fn ngram_counts(&self) -> Vec<usize> {
        self.levels.iter().map(HashMap::len).collect()
    }

    /// Build a unigram model from explicit word probabilities over the
    /// vocabulary plus the sentence-end marker. The probabilities must be
    /// positive and sum to 1 within 1e-9.
    pub fn from_unigrams(vocab: Vocabulary, probs: &[(&str, f64)]) -> Result<Self, NgramError> {
        let mut table: HashMap<Box<[u32]>, Entry> = HashMap::new();
        let mut total = 0.0;
        for (word, p) in probs {
            let id = vocab
                .sym_id(word)
                .ok_or_else(|| NgramError::OovQuery(word.to_string()))?;
            if id == BOS_ID {
                return Err(NgramError::InvalidInput(
                    "sentence-begin cannot carry probability".into(),
                ));
            }
            if !p.is_finite() || *p <= 0.0 {
                return Err(NgramError::InvalidInput(format!(
                    "probability for `{word}` must be positive"
                )));
            }
            if table
                .insert(
                    vec![id].into_boxed_slice(),
                    Entry {
                        logp: p.ln(),
                        bow: None,
                    },
                )
                .is_some()
            {
                return Err(NgramError::InvalidInput(format!("duplicate word `{word}`")));
            }
            total += p;
        }
        if table.len() != vocab.predictable_count() {
            return Err(NgramError::InvalidInput(format!(
                "expected probabilities for all {} predictable symbols, got {}",
                vocab.predictable_count(),
                table.len()
            )));
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(NgramError::InvalidInput(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        table.insert(
            vec![BOS_ID].into_boxed_slice(),
            Entry {
                logp: BOS_DUMMY_LN,
                bow: None,
            },
        );
        Ok(NGramModel::from_parts(
            1,
            vocab,
            vec![table],
            Smoothing::WittenBell,
        ))
    }

    /// The uniform conditional model: every word and the sentence-end marker
    /// get probability `1 / predictable_count()` in every context.
    pub fn uniform(vocab: Vocabulary) -> Self {
        let p = 1.0 / vocab.predictable_count() as f64;
        let probs: Vec<(String, f64)> = vocab
            .words()
            .map(|(w, _)| (w.to_string(), p))
            .chain(std::iter::once((EOS.to_string(), p)))
            .collect();
        let borrowed: Vec<(&str, f64)> = probs.iter().map(|(w, p)| (w.as_str(), *p)).collect();
        NGramModel::from_unigrams(vocab, &borrowed).expect("uniform distribution is valid")
    }

    fn entry(&self, key: &[u32]) -> Option<&Entry> {
        self.levels.get(key.len() - 1)?.get(key)
    }

    /// Backoff recursion over symbol ids. The context must already be
    /// truncated to at most `order - 1` symbols.
    fn logprob_ids(&self, context: &[u32], word: u32) -> f64 {
        debug_assert!(context.len() < self.order);
        let mut acc = 0.0;
        let mut ctx = context;
        loop {
            let mut key = Vec::with_capacity(ctx.len() + 1);
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.entry(&key) {
                return acc + e.logp;
            }
            if ctx.is_empty() {
                // Closed vocabulary: every predictable symbol has a unigram.
                debug_assert!(false, "missing unigram for symbol {word}");
                return acc + BOS_DUMMY_LN;
            }
            if let Some(e) = self.entry(ctx) {
                acc += e.bow.unwrap_or(0.0);
            }
            ctx = &ctx[1..];
        }
    }
}

impl LanguageModel for NGramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn logprob(&self, context: &[&str], word: &str) -> Result<f64, NgramError> {
        let wid = self
            .vocab
            .sym_id(word)
            .ok_or_else(|| NgramError::OovQuery(word.to_string()))?;
        let start = context.len().saturating_sub(self.order.saturating_sub(1));
        let ctx_ids: Vec<u32> = context[start..]
            .iter()
            .map(|c| {
                self.vocab
                    .sym_id(c)
                    .ok_or_else(|| NgramError::OovQuery(c.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(self.logprob_ids(&ctx_ids, wid))
    }
}

/// Permissive wrapper that maps out-of-vocabulary words to a designated
/// `<unk>` word before querying the inner model. The inner vocabulary must
/// contain `<unk>`; without this wrapper OOV queries are hard errors.
pub struct UnkMapped<L> {
    inner: L,
    unk: String,
}

impl<L: LanguageModel> UnkMapped<L> {
    pub const UNK: &'static str = "<unk>";

    pub fn new(inner: L) -> Result<Self, NgramError> {
        if !inner.vocab().contains(Self::UNK) {
            return Err(NgramError::InvalidInput(format!(
                "vocabulary has no `{}` word; cannot run in permissive mode",
                Self::UNK
            )));
        }
        Ok(UnkMapped {
            inner,
            unk: Self::UNK.to_string(),
        })
    }
}

impl<L: LanguageModel> LanguageModel for UnkMapped<L> {
    fn vocab(&self) -> &Vocabulary {
        self.inner.vocab()
    }

    fn logprob(&self, context: &[&str], word: &str) -> Result<f64, NgramError> {
        fn map<'x>(vocab: &Vocabulary, unk: &'x str, w: &'x str) -> &'x str {
            if w == BOS || w == EOS || vocab.contains(w) {
                w
            } else {
                unk
            }
        }
        let v = self.inner.vocab();
        let ctx: Vec<&str> = context.iter().map(|c| map(v, &self.unk, c)).collect();
        self.inner.logprob(&ctx, map(v, &self.unk, word))
    }
}

/// Sum of `P(w | context)` over every predictable symbol. Normalization
/// checks assert this is 1 within tolerance.
pub fn conditional_mass<L: LanguageModel + ?Sized>(
    lm: &L,
    context: &[&str],
) -> Result<f64, NgramError> {
    let words: Vec<String> = lm
        .vocab()
        .words()
        .map(|(w, _)| w.to_string())
        .chain(std::iter::once(EOS.to_string()))
        .collect();
    let mut total = 0.0;
    for w in &words {
        total += lm.logprob(context, w)?.exp();
    }
    Ok(total)
}

impl From<CorpusError> for NgramError {
    fn from(e: CorpusError) -> Self {
        NgramError::InvalidInput(e.to_string())
    }
}
