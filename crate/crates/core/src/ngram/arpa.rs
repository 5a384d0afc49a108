//! ARPA n-gram file format I/O.
//!
//! The standard text layout: a `\data\` header with per-order counts,
//! `\k-grams:` sections in ascending order with log10 probabilities and
//! optional log10 backoff weights, then `\end\`. Internally probabilities
//! are natural-log, so reading and writing convert bases.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::LangTag;

use super::{Entry, NGramModel, NgramError, Smoothing, Vocabulary};

const LN_10: f64 = std::f64::consts::LN_10;

fn fmt_err(line: usize, reason: impl Into<String>) -> NgramError {
    NgramError::ArpaFormat {
        line,
        reason: reason.into(),
    }
}

/// Write a model in ARPA format. Entries are sorted canonically (sentence
/// markers first, then vocabulary order), so equal models serialize to
/// identical bytes.
pub fn write_arpa(model: &NGramModel, mut w: impl Write) -> Result<(), NgramError> {
    writeln!(w, "\\data\\")?;
    for (k, level) in model.levels.iter().enumerate() {
        writeln!(w, "ngram {}={}", k + 1, level.len())?;
    }
    for (k, level) in model.levels.iter().enumerate() {
        writeln!(w, "\n\\{}-grams:", k + 1)?;
        let mut entries: Vec<(&Box<[u32]>, &Entry)> = level.iter().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(b.0));
        for (key, entry) in entries {
            let words: Vec<&str> = key.iter().map(|&id| model.vocab.sym(id)).collect();
            write!(w, "{:.7}\t{}", entry.logp / LN_10, words.join(" "))?;
            if let Some(bow) = entry.bow {
                write!(w, "\t{:.7}", bow / LN_10)?;
            }
            writeln!(w)?;
        }
    }
    writeln!(w, "\n\\end\\")?;
    Ok(())
}

/// Read an ARPA file. With a supplied vocabulary, every word in the file
/// must belong to it and every predictable symbol must have a unigram entry
/// (the closed-vocabulary contract). Without one, a vocabulary is
/// synthesized from the unigram section with every word tagged `und`.
pub fn read_arpa(
    reader: impl BufRead,
    vocab: Option<Vocabulary>,
) -> Result<NGramModel, NgramError> {
    let mut lines = reader.lines().enumerate();

    // Locate \data\.
    let mut counts: Vec<usize> = Vec::new();
    loop {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| fmt_err(0, "missing \\data\\ header"))?;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t == "\\data\\" {
            break;
        }
        return Err(fmt_err(idx + 1, "expected \\data\\ header"));
    }
    // Count declarations.
    let mut pending_section: Option<(usize, usize)> = None; // (order, lineno)
    for (idx, line) in lines.by_ref() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix("ngram ") {
            let (k, n) = rest
                .split_once('=')
                .ok_or_else(|| fmt_err(idx + 1, "expected `ngram k=count`"))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| fmt_err(idx + 1, "bad n-gram order"))?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| fmt_err(idx + 1, "bad n-gram count"))?;
            if k != counts.len() + 1 {
                return Err(fmt_err(idx + 1, "n-gram orders must be consecutive from 1"));
            }
            counts.push(n);
        } else if let Some(k) = parse_section_header(t) {
            pending_section = Some((k, idx + 1));
            break;
        } else {
            return Err(fmt_err(idx + 1, format!("unexpected line `{t}`")));
        }
    }
    if counts.is_empty() {
        return Err(fmt_err(0, "no n-gram counts declared"));
    }
    let order = counts.len();

    // Vocabulary assembly: either validate against the supplied one or
    // build from the unigram section.
    let building_vocab = vocab.is_none();
    let mut vocab = vocab.unwrap_or_default();

    let mut levels: Vec<HashMap<Box<[u32]>, Entry>> = (0..order).map(|_| HashMap::new()).collect();
    let mut expected_section = 1usize;
    let mut done = false;

    let (mut section, header_line) =
        pending_section.ok_or_else(|| fmt_err(0, "missing n-gram sections"))?;
    if section != expected_section {
        return Err(fmt_err(header_line, "n-gram sections must ascend from 1"));
    }

    for (idx, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t == "\\end\\" {
            done = true;
            break;
        }
        if let Some(k) = parse_section_header(t) {
            expected_section += 1;
            if k != expected_section || k > order {
                return Err(fmt_err(idx + 1, "n-gram sections must ascend in order"));
            }
            section = k;
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        let k = section;
        if fields.len() != k + 1 && fields.len() != k + 2 {
            return Err(fmt_err(
                idx + 1,
                format!("expected {} or {} fields for a {k}-gram", k + 1, k + 2),
            ));
        }
        let logp10: f64 = fields[0]
            .parse()
            .map_err(|_| fmt_err(idx + 1, "bad log-probability"))?;
        if logp10 > 0.0 {
            return Err(fmt_err(idx + 1, "log-probability must be <= 0"));
        }
        let bow = if fields.len() == k + 2 {
            Some(
                fields[k + 1]
                    .parse::<f64>()
                    .map_err(|_| fmt_err(idx + 1, "bad backoff weight"))?
                    * LN_10,
            )
        } else {
            None
        };
        let mut key = Vec::with_capacity(k);
        for word in &fields[1..=k] {
            let id = match vocab.sym_id(word) {
                Some(id) => id,
                None if building_vocab && k == 1 => {
                    vocab
                        .insert(word, LangTag::unknown())
                        .map_err(|e| fmt_err(idx + 1, e.to_string()))?;
                    vocab.sym_id(word).expect("word just inserted")
                }
                None => {
                    return Err(fmt_err(
                        idx + 1,
                        format!("word `{word}` has no unigram entry"),
                    ))
                }
            };
            key.push(id);
        }
        if levels[k - 1]
            .insert(
                key.into_boxed_slice(),
                Entry {
                    logp: logp10 * LN_10,
                    bow,
                },
            )
            .is_some()
        {
            return Err(fmt_err(idx + 1, "duplicate n-gram"));
        }
    }
    if !done {
        return Err(fmt_err(0, "missing \\end\\"));
    }
    for (k, (level, declared)) in levels.iter().zip(&counts).enumerate() {
        if level.len() != *declared {
            return Err(fmt_err(
                0,
                format!(
                    "\\data\\ declares {} {}-grams but body has {}",
                    declared,
                    k + 1,
                    level.len()
                ),
            ));
        }
    }
    // Closed-vocabulary completeness: every predictable symbol needs a
    // unigram entry.
    for id in vocab.predictable_ids().collect::<Vec<_>>() {
        if !levels[0].contains_key([id].as_slice()) {
            return Err(fmt_err(
                0,
                format!("vocabulary word `{}` has no unigram entry", vocab.sym(id)),
            ));
        }
    }

    Ok(NGramModel::from_parts(
        order,
        vocab,
        levels,
        Smoothing::KneserNey,
    ))
}

fn parse_section_header(t: &str) -> Option<usize> {
    let rest = t.strip_prefix('\\')?.strip_suffix("-grams:")?;
    rest.parse().ok()
}
