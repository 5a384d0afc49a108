//! Data model, ingestion, validation and descriptive statistics for
//! language-tagged speech transcripts and dataset manifests.
//!
//! A [`Corpus`] is an immutable set of [`Utterance`]s over a declared
//! [`LangRegistry`]; a [`Manifest`] names a subset of utterance ids together
//! with their provenance (manually transcribed, out-of-domain, or
//! automatically transcribed in a given pass). Both are cheap to share
//! across threads once constructed.

mod manifest;
mod parse;
mod stats;

pub use manifest::{Manifest, ManifestEntry, Provenance};
pub use parse::{CorpusFormat, ParseOptions};
pub use stats::{minutes, CorpusStats, LangRow, StatsOptions};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while parsing or validating corpora and manifests.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: duplicate utterance id `{id}`")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: unknown language code `{code}`")]
    UnknownLang { code: String, line: usize },
    #[error("no language registry: expected a header declaring the corpus languages")]
    MissingLangHeader,
    #[error("utterance id `{id}` does not resolve in the corpus")]
    UnresolvedId { id: String },
    #[error("manifests reference different corpora: `{a}` vs `{b}`")]
    CrossCorpus { a: String, b: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A short lowercase language code, e.g. `en`, `zu`, `xh`, `st`, `tn`.
///
/// Tags are validated for shape at construction; whether a tag is acceptable
/// in a given corpus is decided by that corpus's [`LangRegistry`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LangTag(String);

impl LangTag {
    /// Reserved code for words whose language cannot be determined.
    pub const UNKNOWN: &'static str = "und";

    pub fn new(code: &str) -> Result<Self, String> {
        if code.is_empty() {
            return Err("language code is empty".into());
        }
        if !code
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        {
            return Err(format!(
                "language code `{code}` must be lowercase ascii letters/digits"
            ));
        }
        Ok(LangTag(code.to_string()))
    }

    /// The reserved "undetermined" tag.
    pub fn unknown() -> Self {
        LangTag(Self::UNKNOWN.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The set of language codes a corpus may use, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LangRegistry {
    codes: Vec<LangTag>,
}

impl LangRegistry {
    pub fn new(codes: impl IntoIterator<Item = LangTag>) -> Self {
        let mut seen = Vec::new();
        for c in codes {
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        LangRegistry { codes: seen }
    }

    pub fn from_codes(codes: &[&str]) -> Result<Self, String> {
        let tags = codes
            .iter()
            .map(|c| LangTag::new(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(tags))
    }

    pub fn contains(&self, tag: &LangTag) -> bool {
        self.codes.contains(tag)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LangTag> {
        self.codes.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }
}

/// A single language-tagged word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    #[serde(rename = "w")]
    pub surface: String,
    #[serde(rename = "l")]
    pub lang: LangTag,
}

impl Token {
    pub fn new(surface: &str, lang: LangTag) -> Result<Self, String> {
        if surface.is_empty() {
            return Err("token surface is empty".into());
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(format!("token surface `{surface}` contains whitespace"));
        }
        Ok(Token {
            surface: surface.to_string(),
            lang,
        })
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.surface, self.lang)
    }
}

/// An identified token sequence with speaker and duration.
///
/// An utterance with no tokens is *untranscribed*: it still carries id,
/// speaker and duration, and is the raw material of the semi-supervised
/// pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub duration_s: f64,
    pub tokens: Vec<Token>,
}

impl Utterance {
    /// True when the utterance mixes at least two languages.
    pub fn is_code_switched(&self) -> bool {
        let mut first: Option<&LangTag> = None;
        for t in &self.tokens {
            match first {
                None => first = Some(&t.lang),
                Some(l) if l != &t.lang => return true,
                Some(_) => {}
            }
        }
        false
    }

    /// Distinct languages in token order of first appearance.
    pub fn languages(&self) -> Vec<&LangTag> {
        let mut langs: Vec<&LangTag> = Vec::new();
        for t in &self.tokens {
            if !langs.contains(&&t.lang) {
                langs.push(&t.lang);
            }
        }
        langs
    }

    pub fn is_untranscribed(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// An immutable collection of utterances with unique ids over a language
/// registry.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    langs: LangRegistry,
    utterances: Vec<Utterance>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(langs: LangRegistry, utterances: Vec<Utterance>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(utterances.len());
        for (i, u) in utterances.iter().enumerate() {
            for t in &u.tokens {
                if !langs.contains(&t.lang) {
                    return Err(CorpusError::UnknownLang {
                        code: t.lang.to_string(),
                        line: i + 1,
                    });
                }
            }
            if by_id.insert(u.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: u.id.clone(),
                    line: i + 1,
                });
            }
        }
        Ok(Corpus {
            langs,
            utterances,
            by_id,
        })
    }

    pub fn languages(&self) -> &LangRegistry {
        &self.langs
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Utterance> {
        self.by_id.get(id).map(|&i| &self.utterances[i])
    }

    /// Resolve every entry of a manifest, in manifest order.
    pub fn resolve<'a>(
        &'a self,
        manifest: &'a Manifest,
    ) -> Result<Vec<(&'a Utterance, &'a ManifestEntry)>, CorpusError> {
        manifest
            .entries()
            .iter()
            .map(|e| {
                self.get(&e.utt_id)
                    .map(|u| (u, e))
                    .ok_or_else(|| CorpusError::UnresolvedId {
                        id: e.utt_id.clone(),
                    })
            })
            .collect()
    }

    /// A manifest covering the whole corpus with the given provenance.
    pub fn full_manifest(&self, name: &str, provenance: Provenance) -> Manifest {
        Manifest::new(
            name,
            None,
            self.utterances
                .iter()
                .map(|u| ManifestEntry {
                    utt_id: u.id.clone(),
                    provenance: provenance.clone(),
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(s: &str, l: &str) -> Token {
        Token::new(s, LangTag::new(l).unwrap()).unwrap()
    }

    #[test]
    fn code_switch_detection() {
        let u = Utterance {
            id: "u1".into(),
            speaker: "s".into(),
            duration_s: 1.0,
            tokens: vec![tok("hello", "en"), tok("sawubona", "zu")],
        };
        assert!(u.is_code_switched());
        let m = Utterance {
            id: "u2".into(),
            speaker: "s".into(),
            duration_s: 1.0,
            tokens: vec![tok("hello", "en"), tok("world", "en")],
        };
        assert!(!m.is_code_switched());
        let e = Utterance {
            id: "u3".into(),
            speaker: "s".into(),
            duration_s: 1.0,
            tokens: vec![],
        };
        assert!(!e.is_code_switched());
        assert!(e.is_untranscribed());
    }

    #[test]
    fn lang_tag_shape() {
        assert!(LangTag::new("en").is_ok());
        assert!(LangTag::new("").is_err());
        assert!(LangTag::new("EN").is_err());
        assert!(LangTag::new("e n").is_err());
    }

    #[test]
    fn token_shape() {
        let l = LangTag::new("en").unwrap();
        assert!(Token::new("word", l.clone()).is_ok());
        assert!(Token::new("", l.clone()).is_err());
        assert!(Token::new("two words", l).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let langs = LangRegistry::from_codes(&["en"]).unwrap();
        let u = Utterance {
            id: "u1".into(),
            speaker: "s".into(),
            duration_s: 1.0,
            tokens: vec![],
        };
        let err = Corpus::new(langs, vec![u.clone(), u]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { .. }));
    }
}
