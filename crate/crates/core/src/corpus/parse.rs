//! Corpus readers and writers for the two supported formats.
//!
//! JSONL: a header line `{"langs":["en","zu"]}` followed by one utterance
//! object per line: `{"id":…,"speaker":…,"duration_s":…,"tokens":[{"w":…,"l":…}]}`.
//!
//! Tagged text: `<id> <speaker> <duration_s> <surface>/<lang> …`, whitespace
//! separated. Lines starting with `#` are comments; a `# langs: en zu …`
//! comment before the first utterance declares the registry, and the writer
//! always emits one.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, LangRegistry, LangTag, Token, Utterance};

/// Options controlling corpus parsing.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Use this registry instead of requiring one in the stream header.
    pub registry: Option<LangRegistry>,
}

#[derive(Serialize, Deserialize)]
struct JsonHeader {
    langs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonUtterance {
    id: String,
    speaker: String,
    duration_s: f64,
    tokens: Vec<JsonToken>,
}

#[derive(Serialize, Deserialize)]
struct JsonToken {
    w: String,
    l: String,
}

fn parse_err(line: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        line,
        reason: reason.into(),
    }
}

struct Builder {
    registry: LangRegistry,
    utterances: Vec<Utterance>,
    seen: std::collections::HashSet<String>,
}

impl Builder {
    fn new(registry: LangRegistry) -> Self {
        Builder {
            registry,
            utterances: Vec::new(),
            seen: std::collections::HashSet::new(),
        }
    }

    fn push(
        &mut self,
        line: usize,
        id: String,
        speaker: String,
        duration_s: f64,
        tokens: Vec<(String, String)>,
    ) -> Result<(), CorpusError> {
        if id.is_empty() {
            return Err(parse_err(line, "empty utterance id"));
        }
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(parse_err(line, format!("invalid duration {duration_s}")));
        }
        if !self.seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id, line });
        }
        let mut toks = Vec::with_capacity(tokens.len());
        for (surface, code) in tokens {
            let lang = LangTag::new(&code).map_err(|e| parse_err(line, e))?;
            if !self.registry.contains(&lang) {
                return Err(CorpusError::UnknownLang { code, line });
            }
            toks.push(Token::new(&surface, lang).map_err(|e| parse_err(line, e))?);
        }
        self.utterances.push(Utterance {
            id,
            speaker,
            duration_s,
            tokens: toks,
        });
        Ok(())
    }

    fn finish(self) -> Result<Corpus, CorpusError> {
        Corpus::new(self.registry, self.utterances)
    }
}

fn registry_from_codes(codes: &[String]) -> Result<LangRegistry, CorpusError> {
    let tags = codes
        .iter()
        .map(|c| LangTag::new(c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| parse_err(1, e))?;
    if tags.is_empty() {
        return Err(CorpusError::MissingLangHeader);
    }
    Ok(LangRegistry::new(tags))
}

impl Corpus {
    /// Parse the JSONL corpus format. The first line must be the language
    /// header unless [`ParseOptions::registry`] is supplied.
    pub fn parse_jsonl(reader: impl BufRead, opts: &ParseOptions) -> Result<Corpus, CorpusError> {
        let mut builder: Option<Builder> = opts.registry.clone().map(Builder::new);
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match &mut builder {
                None => {
                    let header: JsonHeader =
                        serde_json::from_str(&line).map_err(|_| CorpusError::MissingLangHeader)?;
                    builder = Some(Builder::new(registry_from_codes(&header.langs)?));
                }
                Some(b) => {
                    let u: JsonUtterance = serde_json::from_str(&line)
                        .map_err(|e| parse_err(lineno, e.to_string()))?;
                    b.push(
                        lineno,
                        u.id,
                        u.speaker,
                        u.duration_s,
                        u.tokens.into_iter().map(|t| (t.w, t.l)).collect(),
                    )?;
                }
            }
        }
        builder.ok_or(CorpusError::MissingLangHeader)?.finish()
    }

    /// Parse the whitespace-separated tagged-text format.
    pub fn parse_tagged(reader: impl BufRead, opts: &ParseOptions) -> Result<Corpus, CorpusError> {
        let mut builder: Option<Builder> = opts.registry.clone().map(Builder::new);
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(codes) = comment.strip_prefix("langs:") {
                    if builder.is_none() {
                        let codes: Vec<String> =
                            codes.split_whitespace().map(str::to_string).collect();
                        builder = Some(Builder::new(registry_from_codes(&codes)?));
                    }
                }
                continue;
            }
            let b = builder.as_mut().ok_or(CorpusError::MissingLangHeader)?;
            let mut fields = trimmed.split_whitespace();
            let id = fields
                .next()
                .ok_or_else(|| parse_err(lineno, "missing utterance id"))?;
            let speaker = fields
                .next()
                .ok_or_else(|| parse_err(lineno, "missing speaker"))?;
            let duration: f64 = fields
                .next()
                .ok_or_else(|| parse_err(lineno, "missing duration"))?
                .parse()
                .map_err(|_| parse_err(lineno, "duration is not a number"))?;
            let mut tokens = Vec::new();
            for tokfield in fields {
                let (surface, lang) = tokfield.rsplit_once('/').ok_or_else(|| {
                    parse_err(lineno, format!("token `{tokfield}` has no /lang tag"))
                })?;
                tokens.push((surface.to_string(), lang.to_string()));
            }
            b.push(
                lineno,
                id.to_string(),
                speaker.to_string(),
                duration,
                tokens,
            )?;
        }
        builder.ok_or(CorpusError::MissingLangHeader)?.finish()
    }

    /// Parse either format, selecting by name: `jsonl` or `tagged-text`.
    pub fn parse(
        reader: impl BufRead,
        format: CorpusFormat,
        opts: &ParseOptions,
    ) -> Result<Corpus, CorpusError> {
        match format {
            CorpusFormat::Jsonl => Corpus::parse_jsonl(reader, opts),
            CorpusFormat::TaggedText => Corpus::parse_tagged(reader, opts),
        }
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<(), CorpusError> {
        let header = JsonHeader {
            langs: self.languages().iter().map(|l| l.to_string()).collect(),
        };
        writeln!(
            w,
            "{}",
            serde_json::to_string(&header).expect("header json")
        )?;
        for u in self.utterances() {
            let ju = JsonUtterance {
                id: u.id.clone(),
                speaker: u.speaker.clone(),
                duration_s: u.duration_s,
                tokens: u
                    .tokens
                    .iter()
                    .map(|t| JsonToken {
                        w: t.surface.clone(),
                        l: t.lang.to_string(),
                    })
                    .collect(),
            };
            writeln!(w, "{}", serde_json::to_string(&ju).expect("utterance json"))?;
        }
        Ok(())
    }

    pub fn write_tagged(&self, mut w: impl Write) -> Result<(), CorpusError> {
        let codes: Vec<String> = self.languages().iter().map(|l| l.to_string()).collect();
        writeln!(w, "# langs: {}", codes.join(" "))?;
        for u in self.utterances() {
            write!(w, "{} {} {}", u.id, u.speaker, u.duration_s)?;
            for t in &u.tokens {
                write!(w, " {}", t)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// The two corpus serialization formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    TaggedText,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tagged-text" | "tagged" => Ok(CorpusFormat::TaggedText),
            other => Err(format!("unknown corpus format `{other}`")),
        }
    }
}
