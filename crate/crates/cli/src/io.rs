//! Shared file loading: corpora, manifests, models and mixture files.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cswitch_core::corpus::{Corpus, Manifest};
use cswitch_core::ngram::{read_arpa, LanguageModel, MixtureLM, Vocabulary};

use crate::CliError;

pub fn load_corpus(path: &Path, format: Option<&str>) -> Result<Corpus, CliError> {
    cswitch_core::semisup::load_corpus(path, format)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let file =
        fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".into());
    Ok(Manifest::parse(BufReader::new(file), &name, None)?)
}

pub fn load_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    let file =
        fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(Vocabulary::read(BufReader::new(file))?)
}

/// The mixture file format written by `interpolate`: component model paths
/// (ARPA or nested mixture files, resolved relative to this file) and their
/// weights.
#[derive(Debug, Serialize, Deserialize)]
pub struct MixtureFile {
    pub components: Vec<String>,
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_perplexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

/// Load a model by extension: `.arpa` as an ARPA n-gram model, `.json` as a
/// mixture file.
pub fn load_model(
    path: &Path,
    vocab: Option<&Vocabulary>,
) -> Result<Box<dyn LanguageModel>, CliError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let mf: MixtureFile = serde_json::from_slice(
                &fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
            )
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            if mf.components.len() != mf.weights.len() {
                return Err(CliError::Data(format!(
                    "{}: {} components but {} weights",
                    path.display(),
                    mf.components.len(),
                    mf.weights.len()
                )));
            }
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            let components: Vec<Box<dyn LanguageModel>> = mf
                .components
                .iter()
                .map(|c| {
                    let p = base.join(c);
                    load_model(&p, vocab)
                })
                .collect::<Result<_, _>>()?;
            Ok(Box::new(MixtureLM::new(components, mf.weights)?))
        }
        _ => {
            let file = fs::File::open(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok(Box::new(read_arpa(BufReader::new(file), vocab.cloned())?))
        }
    }
}
