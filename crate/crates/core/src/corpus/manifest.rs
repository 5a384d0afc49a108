//! Dataset manifests: named sets of utterance references with provenance.
//!
//! File format is plain text, one `<utt_id>\t<provenance>` per line, where
//! provenance is `ManT`, `OOD` or `AutoT@<pass>`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Where a manifest entry's transcript comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// Manually transcribed in-domain data.
    ManT,
    /// Out-of-domain supplementary data.
    Ood,
    /// Automatically transcribed in the given semi-supervised pass.
    AutoT(u32),
}

impl Provenance {
    /// Collision precedence: manual labels win over out-of-domain, which wins
    /// over automatic transcripts; earlier passes win among AutoT.
    fn rank(&self) -> u64 {
        match self {
            Provenance::ManT => 0,
            Provenance::Ood => 1,
            Provenance::AutoT(p) => 2 + u64::from(*p),
        }
    }

    pub fn is_autot(&self) -> bool {
        matches!(self, Provenance::AutoT(_))
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::ManT => f.write_str("ManT"),
            Provenance::Ood => f.write_str("OOD"),
            Provenance::AutoT(p) => write!(f, "AutoT@{p}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ManT" => Ok(Provenance::ManT),
            "OOD" => Ok(Provenance::Ood),
            other => {
                if let Some(p) = other.strip_prefix("AutoT@") {
                    p.parse::<u32>()
                        .map(Provenance::AutoT)
                        .map_err(|_| format!("bad AutoT pass in `{other}`"))
                } else {
                    Err(format!("unknown provenance `{other}`"))
                }
            }
        }
    }
}

/// One manifest line: an utterance reference plus its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub utt_id: String,
    pub provenance: Provenance,
}

/// A named set of utterance references with provenance labels.
///
/// `source` identifies the corpus the ids resolve in; manifests with
/// conflicting sources cannot be unioned. A `None` source is compatible with
/// anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    name: String,
    source: Option<String>,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(name: &str, source: Option<String>, entries: Vec<ManifestEntry>) -> Self {
        Manifest {
            name: name.to_string(),
            source,
            entries,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, utt_id: &str) -> bool {
        self.entries.iter().any(|e| e.utt_id == utt_id)
    }

    /// Parse the one-entry-per-line manifest format.
    pub fn parse(
        reader: impl BufRead,
        name: &str,
        source: Option<String>,
    ) -> Result<Manifest, CorpusError> {
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (id, prov) = trimmed.split_once('\t').ok_or(CorpusError::Parse {
                line: lineno,
                reason: "expected `<utt_id>\\t<provenance>`".into(),
            })?;
            let provenance: Provenance = prov.trim().parse().map_err(|e| CorpusError::Parse {
                line: lineno,
                reason: e,
            })?;
            if !seen.insert(id.to_string()) {
                return Err(CorpusError::DuplicateId {
                    id: id.to_string(),
                    line: lineno,
                });
            }
            entries.push(ManifestEntry {
                utt_id: id.to_string(),
                provenance,
            });
        }
        Ok(Manifest::new(name, source, entries))
    }

    pub fn write(&self, mut w: impl Write) -> Result<(), CorpusError> {
        for e in &self.entries {
            writeln!(w, "{}\t{}", e.utt_id, e.provenance)?;
        }
        Ok(())
    }

    /// Set union of manifests. On id collision the entry with the strongest
    /// provenance is kept (ManT over OOD over AutoT; earlier pass among
    /// AutoT). The result is sorted by utterance id, which makes union
    /// idempotent, commutative and associative.
    pub fn union(manifests: &[&Manifest]) -> Result<Manifest, CorpusError> {
        let mut source: Option<String> = None;
        let mut merged: std::collections::BTreeMap<String, Provenance> =
            std::collections::BTreeMap::new();
        for m in manifests {
            if let Some(s) = &m.source {
                match &source {
                    None => source = Some(s.clone()),
                    Some(prev) if prev != s => {
                        return Err(CorpusError::CrossCorpus {
                            a: prev.clone(),
                            b: s.clone(),
                        })
                    }
                    Some(_) => {}
                }
            }
            for e in &m.entries {
                merged
                    .entry(e.utt_id.clone())
                    .and_modify(|p| {
                        if e.provenance.rank() < p.rank() {
                            *p = e.provenance.clone();
                        }
                    })
                    .or_insert_with(|| e.provenance.clone());
            }
        }
        let name = if manifests.is_empty() {
            "union".to_string()
        } else {
            manifests
                .iter()
                .map(|m| m.name.as_str())
                .collect::<Vec<_>>()
                .join("+")
        };
        Ok(Manifest {
            name,
            source,
            entries: merged
                .into_iter()
                .map(|(utt_id, provenance)| ManifestEntry { utt_id, provenance })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, p: Provenance) -> ManifestEntry {
        ManifestEntry {
            utt_id: id.into(),
            provenance: p,
        }
    }

    #[test]
    fn union_of_nothing_is_empty() {
        let m = Manifest::union(&[]).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn union_of_disjoint_sets() {
        let a = Manifest::new("a", None, vec![entry("u1", Provenance::ManT)]);
        let b = Manifest::new("b", None, vec![entry("u2", Provenance::ManT)]);
        let u = Manifest::union(&[&a, &b]).unwrap();
        assert_eq!(u.len(), 2);
        assert!(u.contains("u1") && u.contains("u2"));
    }

    #[test]
    fn manual_labels_win_on_collision() {
        let a = Manifest::new("a", None, vec![entry("u1", Provenance::ManT)]);
        let b = Manifest::new("b", None, vec![entry("u1", Provenance::AutoT(1))]);
        for order in [vec![&a, &b], vec![&b, &a]] {
            let u = Manifest::union(&order).unwrap();
            assert_eq!(u.len(), 1);
            assert_eq!(u.entries()[0].provenance, Provenance::ManT);
        }
    }

    #[test]
    fn union_is_idempotent_and_associative() {
        let a = Manifest::new("a", None, vec![entry("u1", Provenance::Ood)]);
        let b = Manifest::new("b", None, vec![entry("u2", Provenance::AutoT(2))]);
        let c = Manifest::new("c", None, vec![entry("u1", Provenance::AutoT(1))]);
        let aa = Manifest::union(&[&a, &a]).unwrap();
        assert_eq!(aa.entries(), a.entries());
        let left = Manifest::union(&[&Manifest::union(&[&a, &b]).unwrap(), &c]).unwrap();
        let right = Manifest::union(&[&a, &Manifest::union(&[&b, &c]).unwrap()]).unwrap();
        assert_eq!(left.entries(), right.entries());
    }

    #[test]
    fn cross_corpus_rejected() {
        let a = Manifest::new("a", Some("c1".into()), vec![]);
        let b = Manifest::new("b", Some("c2".into()), vec![]);
        let err = Manifest::union(&[&a, &b]).unwrap_err();
        assert!(matches!(err, CorpusError::CrossCorpus { .. }));
    }

    #[test]
    fn provenance_text_roundtrip() {
        for p in [Provenance::ManT, Provenance::Ood, Provenance::AutoT(3)] {
            let s = p.to_string();
            assert_eq!(s.parse::<Provenance>().unwrap(), p);
        }
        assert!("AutoT@x".parse::<Provenance>().is_err());
        assert!("mant".parse::<Provenance>().is_err());
    }

    #[test]
    fn manifest_file_roundtrip() {
        let m = Manifest::new(
            "m",
            None,
            vec![
                entry("u1", Provenance::ManT),
                entry("u2", Provenance::AutoT(1)),
            ],
        );
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let parsed = Manifest::parse(buf.as_slice(), "m", None).unwrap();
        assert_eq!(parsed.entries(), m.entries());
    }
}
