//! Model estimation: n-gram counting and interpolated smoothing.
//!
//! Both smoothing methods have the form
//! `P(w|h) = discounted(w|h) + gamma(h) * P(w|h')`, so the backoff weight
//! stored for a context is exactly its interpolation mass `gamma(h)`. The
//! recursion grounds in a uniform distribution over the closed vocabulary,
//! which is what gives never-seen words positive probability.
//!
//! Kneser-Ney uses modified discounts (one per count level, estimated from
//! count-of-counts) and continuation counts at the lower orders; n-grams
//! starting with the sentence-begin marker keep raw counts because nothing
//! can precede them. When the count-of-count statistics of any order are
//! degenerate, the whole model falls back to Witten-Bell with a warning
//! unless the fallback is disabled.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::{Entry, NGramModel, NgramError, Vocabulary, BOS_DUMMY_LN, BOS_ID};
use crate::corpus::Utterance;

/// Smoothing method for [`train`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    /// Interpolated modified Kneser-Ney; the default.
    KneserNey,
    /// Interpolated Witten-Bell; also the automatic fallback for corpora
    /// too small for Kneser-Ney discount estimation.
    WittenBell,
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::KneserNey => f.write_str("kneser-ney"),
            Smoothing::WittenBell => f.write_str("witten-bell"),
        }
    }
}

impl std::str::FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kneser-ney" | "kn" => Ok(Smoothing::KneserNey),
            "witten-bell" | "wb" => Ok(Smoothing::WittenBell),
            other => Err(format!("unknown smoothing `{other}`")),
        }
    }
}

/// Training configuration.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// N-gram order, 1..=5.
    pub order: usize,
    pub smoothing: Smoothing,
    /// Fall back to Witten-Bell when Kneser-Ney discounting is undefined.
    pub auto_fallback: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            order: 3,
            smoothing: Smoothing::KneserNey,
            auto_fallback: true,
        }
    }
}

/// Raw k-gram counts for k = 1..=order over `<s> w1 .. wn </s>` sequences.
/// The sentence-begin unigram is not counted (it is never predicted).
fn count_raw(sentences: &[Vec<u32>], order: usize) -> Vec<HashMap<Box<[u32]>, u64>> {
    let mut levels: Vec<HashMap<Box<[u32]>, u64>> = vec![HashMap::new(); order];
    for sent in sentences {
        for end in 1..sent.len() {
            for k in 1..=order {
                if end + 1 >= k {
                    let start = end + 1 - k;
                    *levels[k - 1]
                        .entry(sent[start..=end].to_vec().into_boxed_slice())
                        .or_insert(0) += 1;
                }
            }
        }
    }
    levels
}

/// Continuation counts `N1+(. g)` for every raw k-gram, except that k-grams
/// starting with the sentence-begin marker keep their raw counts.
fn continuation_counts(
    raw_k: &HashMap<Box<[u32]>, u64>,
    raw_k1: &HashMap<Box<[u32]>, u64>,
) -> HashMap<Box<[u32]>, u64> {
    let mut cont: HashMap<Box<[u32]>, u64> = HashMap::with_capacity(raw_k.len());
    for key in raw_k1.keys() {
        *cont
            .entry(key[1..].to_vec().into_boxed_slice())
            .or_insert(0) += 1;
    }
    let mut used = HashMap::with_capacity(raw_k.len());
    for (key, &raw) in raw_k {
        let c = if key[0] == BOS_ID {
            raw
        } else {
            *cont.get(key).unwrap_or(&0)
        };
        debug_assert!(c > 0, "observed k-gram must have a positive used count");
        used.insert(key.clone(), c);
    }
    used
}

/// Modified Kneser-Ney discounts for one order.
#[derive(Debug, Clone, Copy)]
struct Discounts {
    d1: f64,
    d2: f64,
    d3: f64,
}

impl Discounts {
    fn of(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3,
        }
    }

    /// Estimate from count-of-counts; `Err` describes the degeneracy.
    fn estimate(counts: impl Iterator<Item = u64>) -> Result<Discounts, String> {
        let (mut n1, mut n2, mut n3, mut n4, mut max) = (0u64, 0u64, 0u64, 0u64, 0u64);
        for c in counts {
            match c {
                1 => n1 += 1,
                2 => n2 += 1,
                3 => n3 += 1,
                4 => n4 += 1,
                _ => {}
            }
            max = max.max(c);
        }
        if n1 == 0 || n2 == 0 {
            return Err(format!("count-of-counts too sparse (n1={n1}, n2={n2})"));
        }
        let y = n1 as f64 / (n1 as f64 + 2.0 * n2 as f64);
        let d1 = 1.0 - 2.0 * y * n2 as f64 / n1 as f64;
        let d2 = 2.0 - 3.0 * y * n3 as f64 / n2 as f64;
        let d3 = if max >= 3 {
            if n3 == 0 {
                return Err("no n-grams of count 3 to estimate D3".into());
            }
            3.0 - 4.0 * y * n4 as f64 / n3 as f64
        } else {
            0.0
        };
        if d1 <= 0.0 || (max >= 2 && d2 <= 0.0) || (max >= 3 && d3 <= 0.0) {
            return Err(format!(
                "non-positive discount (D1={d1:.3}, D2={d2:.3}, D3={d3:.3})"
            ));
        }
        Ok(Discounts { d1, d2, d3 })
    }
}

struct LevelCounts {
    /// Raw counts; the stored n-gram set at this level.
    raw: HashMap<Box<[u32]>, u64>,
    /// Counts the estimator works on (continuation counts at lower
    /// Kneser-Ney orders, raw otherwise).
    used: HashMap<Box<[u32]>, u64>,
}

/// Train a backoff n-gram model over the closed vocabulary. Utterances with
/// no tokens are skipped; an entirely empty corpus yields the uniform model.
pub fn train(
    utterances: &[Utterance],
    cfg: &TrainConfig,
    vocab: &Vocabulary,
) -> Result<NGramModel, NgramError> {
    if !(1..=5).contains(&cfg.order) {
        return Err(NgramError::InvalidOrder(cfg.order));
    }
    let mut sentences: Vec<Vec<u32>> = Vec::new();
    for u in utterances {
        if u.tokens.is_empty() {
            continue;
        }
        let mut seq = Vec::with_capacity(u.tokens.len() + 2);
        seq.push(BOS_ID);
        for t in &u.tokens {
            let id = vocab
                .sym_id(&t.surface)
                .ok_or_else(|| NgramError::OovInTraining(t.surface.clone()))?;
            seq.push(id);
        }
        seq.push(super::EOS_ID);
        sentences.push(seq);
    }

    let raw = count_raw(&sentences, cfg.order);

    // Assemble per-level counts and decide the effective smoothing.
    let mut smoothing = cfg.smoothing;
    let mut discounts: Vec<Option<Discounts>> = vec![None; cfg.order];
    let mut levels: Vec<LevelCounts> = Vec::with_capacity(cfg.order);
    for k in 1..=cfg.order {
        let used = if smoothing == Smoothing::KneserNey && k < cfg.order {
            continuation_counts(&raw[k - 1], &raw[k])
        } else {
            raw[k - 1].clone()
        };
        levels.push(LevelCounts {
            raw: raw[k - 1].clone(),
            used,
        });
    }
    if smoothing == Smoothing::KneserNey {
        let empty = sentences.is_empty();
        let mut failure: Option<String> = None;
        if empty {
            failure = Some("empty training corpus".into());
        } else {
            for (k, lc) in levels.iter().enumerate() {
                match Discounts::estimate(lc.used.values().copied()) {
                    Ok(d) => discounts[k] = Some(d),
                    Err(reason) => {
                        failure = Some(format!("order {}: {}", k + 1, reason));
                        break;
                    }
                }
            }
        }
        if let Some(reason) = failure {
            if !cfg.auto_fallback {
                return Err(NgramError::InsufficientData(reason));
            }
            log::warn!("kneser-ney discounting undefined ({reason}); falling back to witten-bell");
            smoothing = Smoothing::WittenBell;
            for (k, lc) in levels.iter_mut().enumerate() {
                if k + 1 < cfg.order {
                    lc.used = lc.raw.clone();
                }
            }
        }
    }

    let mut model = NGramModel::from_parts(
        cfg.order,
        vocab.clone(),
        vec![HashMap::new(); cfg.order],
        smoothing,
    );
    build_unigrams(&mut model, &levels[0], discounts[0], smoothing);
    for k in 2..=cfg.order {
        build_level(&mut model, k, &levels[k - 1], discounts[k - 1], smoothing);
    }
    Ok(model)
}

/// Uniform floor over the predictable symbols.
fn uniform_floor(vocab: &Vocabulary) -> f64 {
    1.0 / vocab.predictable_count() as f64
}

fn build_unigrams(
    model: &mut NGramModel,
    counts: &LevelCounts,
    discounts: Option<Discounts>,
    smoothing: Smoothing,
) {
    let floor = uniform_floor(&model.vocab);
    let ids: Vec<u32> = model.vocab.predictable_ids().collect();
    let used_of = |id: u32| -> u64 { counts.used.get([id].as_slice()).copied().unwrap_or(0) };
    let raw_of = |id: u32| -> u64 { counts.raw.get([id].as_slice()).copied().unwrap_or(0) };

    let probs: Vec<f64> = match smoothing {
        Smoothing::KneserNey => {
            let d = discounts.expect("discounts estimated for kneser-ney");
            let tot: u64 = ids.iter().map(|&id| used_of(id)).sum();
            let (mut n1, mut n2, mut n3p) = (0u64, 0u64, 0u64);
            for &id in &ids {
                match used_of(id) {
                    0 => {}
                    1 => n1 += 1,
                    2 => n2 += 1,
                    _ => n3p += 1,
                }
            }
            let gamma = (d.d1 * n1 as f64 + d.d2 * n2 as f64 + d.d3 * n3p as f64) / tot as f64;
            ids.iter()
                .map(|&id| {
                    let c = used_of(id);
                    (c as f64 - d.of(c)).max(0.0) / tot as f64 + gamma * floor
                })
                .collect()
        }
        Smoothing::WittenBell => {
            let n: u64 = ids.iter().map(|&id| raw_of(id)).sum();
            let t = ids.iter().filter(|&&id| raw_of(id) > 0).count() as u64;
            if n == 0 {
                // Empty corpus: the uniform model.
                ids.iter().map(|_| floor).collect()
            } else {
                let gamma = t as f64 / (n + t) as f64;
                ids.iter()
                    .map(|&id| raw_of(id) as f64 / (n + t) as f64 + gamma * floor)
                    .collect()
            }
        }
    };
    for (&id, p) in ids.iter().zip(&probs) {
        model.levels[0].insert(
            vec![id].into_boxed_slice(),
            Entry {
                logp: p.ln(),
                bow: None,
            },
        );
    }
    model.levels[0].insert(
        vec![BOS_ID].into_boxed_slice(),
        Entry {
            logp: BOS_DUMMY_LN,
            bow: None,
        },
    );
}

/// Successors of one context: (word, raw count, estimator count).
type Successors = Vec<(u32, u64, u64)>;

fn build_level(
    model: &mut NGramModel,
    k: usize,
    counts: &LevelCounts,
    discounts: Option<Discounts>,
    smoothing: Smoothing,
) {
    // Deterministic grouping: context -> successors sorted by word id.
    let mut groups: BTreeMap<Box<[u32]>, Successors> = BTreeMap::new();
    for (key, &raw) in &counts.raw {
        let used = counts.used[key];
        let ctx = key[..k - 1].to_vec().into_boxed_slice();
        groups.entry(ctx).or_default().push((key[k - 1], raw, used));
    }
    for successors in groups.values_mut() {
        successors.sort_unstable_by_key(|(w, _, _)| *w);
    }

    for (ctx, successors) in &groups {
        let tail = &ctx[1..];
        let gamma: f64;
        let mut inserts: Vec<(u32, f64)> = Vec::with_capacity(successors.len());
        match smoothing {
            Smoothing::KneserNey => {
                let d = discounts.expect("discounts estimated for kneser-ney");
                let tot: u64 = successors.iter().map(|(_, _, u)| u).sum();
                let (mut n1, mut n2, mut n3p) = (0u64, 0u64, 0u64);
                for &(_, _, u) in successors {
                    match u {
                        1 => n1 += 1,
                        2 => n2 += 1,
                        _ => n3p += 1,
                    }
                }
                gamma = (d.d1 * n1 as f64 + d.d2 * n2 as f64 + d.d3 * n3p as f64) / tot as f64;
                for &(w, _, used) in successors {
                    let low = model.logprob_ids(tail, w).exp();
                    let p = (used as f64 - d.of(used)).max(0.0) / tot as f64 + gamma * low;
                    inserts.push((w, p));
                }
            }
            Smoothing::WittenBell => {
                let rawtot: u64 = successors.iter().map(|(_, r, _)| r).sum();
                let t = successors.len() as u64;
                gamma = t as f64 / (rawtot + t) as f64;
                for &(w, raw, _) in successors {
                    let low = model.logprob_ids(tail, w).exp();
                    let p = raw as f64 / (rawtot + t) as f64 + gamma * low;
                    inserts.push((w, p));
                }
            }
        }
        for (w, p) in inserts {
            let mut key = Vec::with_capacity(k);
            key.extend_from_slice(ctx);
            key.push(w);
            model.levels[k - 1].insert(
                key.into_boxed_slice(),
                Entry {
                    logp: p.ln(),
                    bow: None,
                },
            );
        }
        // The context's backoff weight is its interpolation mass.
        let entry = model.levels[k - 2]
            .get_mut(ctx)
            .expect("every observed context is stored one level down");
        entry.bow = Some(gamma.ln());
    }
}
