//! Pipeline orchestration: pass loop, run directory, resumability.
//!
//! A run directory is laid out as
//!
//! ```text
//! autot.pass<p>.manifest            retained AutoT entries of pass p
//! autot.pass<p>.jsonl               their hypothesis transcripts
//! trainset.autot-model.pass<p>.manifest   ManT + OOD + AutoT@(p-1)
//! trainset.asr.pass<p>.manifest           ManT + AutoT@p (never OOD)
//! report.pass<p>.json               the pass report
//! state.json                        resume state (config hash, last pass)
//! run.json                          provenance record (the only file with
//!                                   wall-clock timestamps)
//! ```
//!
//! All data artifacts are byte-deterministic given the config seed; reruns
//! into a fresh directory produce identical bytes for everything except
//! `run.json`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    Corpus, CorpusFormat, Manifest, ManifestEntry, ParseOptions, Provenance, Token, Utterance,
};

use super::select::{assign_all, compute_thresholds, filter_assignment, pass_report};
use super::{
    DecodeResult, PairId, PairRegistry, PairSpec, PassReport, SemisupError, ThresholdPolicy,
};

/// Which model a trainer is asked to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelRole {
    /// The model that transcribes the untranscribed pool (may see OOD data).
    Transcriber,
    /// The model whose quality the experiment reports (never sees OOD data).
    Recognizer,
}

/// What a trainer reports back after training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    /// Clean-equivalent hours of training data consumed.
    pub hours: f64,
    /// Backend-specific details.
    pub detail: serde_json::Value,
}

/// A composed training set: a manifest over the corpus plus the transcripts
/// for its AutoT entries (manual entries read their transcript from the
/// corpus itself).
pub struct TrainSet<'a> {
    pub manifest: &'a Manifest,
    pub corpus: &'a Corpus,
    pub autot_transcripts: &'a HashMap<String, Vec<Token>>,
}

impl TrainSet<'_> {
    pub fn transcript_of(&self, entry: &ManifestEntry) -> Result<&[Token], SemisupError> {
        if entry.provenance.is_autot() {
            self.autot_transcripts
                .get(&entry.utt_id)
                .map(Vec::as_slice)
                .ok_or_else(|| {
                    SemisupError::Config(format!("no AutoT transcript for `{}`", entry.utt_id))
                })
        } else {
            self.corpus
                .get(&entry.utt_id)
                .map(|u| u.tokens.as_slice())
                .ok_or_else(|| SemisupError::Config(format!("`{}` not in corpus", entry.utt_id)))
        }
    }

    pub fn duration_of(&self, utt_id: &str) -> Result<f64, SemisupError> {
        self.corpus
            .get(utt_id)
            .map(|u| u.duration_s)
            .ok_or_else(|| SemisupError::Config(format!("`{utt_id}` not in corpus")))
    }

    pub fn total_duration_s(&self) -> Result<f64, SemisupError> {
        let mut total = 0.0;
        for e in self.manifest.entries() {
            total += self.duration_of(&e.utt_id)?;
        }
        Ok(total)
    }
}

/// Produces decoder state from training sets.
pub trait TrainerInterface {
    fn train(
        &mut self,
        role: ModelRole,
        pass: u32,
        trainset: &TrainSet<'_>,
    ) -> Result<TrainSummary, SemisupError>;

    /// Serializable trainer state for resumption.
    fn snapshot(&self) -> serde_json::Value {
        serde_json::Value::Null
    }

    fn restore(&mut self, _state: &serde_json::Value) -> Result<(), SemisupError> {
        Ok(())
    }
}

/// Decodes one utterance with one language-pair decoder.
pub trait DecoderInterface {
    fn decode(&self, utterance: &Utterance, pair: &PairId) -> Result<DecodeResult, SemisupError>;
}

/// How the pipeline binds to a decoder implementation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderBinding {
    /// The built-in simulator, reading hidden truth from its own corpus.
    Sim {
        truth_corpus: PathBuf,
        #[serde(default)]
        params: serde_json::Value,
    },
    /// An external process speaking the line protocol.
    External {
        cmd: Vec<String>,
        #[serde(default = "default_timeout_s")]
        timeout_s: u64,
    },
}

fn default_timeout_s() -> u64 {
    60
}

fn default_passes() -> u32 {
    2
}

/// Pipeline run configuration, read from a single JSON document. Relative
/// paths are resolved against the config file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    /// `jsonl` (default) or `tagged-text`.
    #[serde(default)]
    pub corpus_format: Option<String>,
    pub mant_manifest: PathBuf,
    #[serde(default)]
    pub ood_manifest: Option<PathBuf>,
    pub untranscribed_manifest: PathBuf,
    pub policy: ThresholdPolicy,
    #[serde(default = "default_passes")]
    pub passes: u32,
    pub seed: u64,
    pub run_dir: PathBuf,
    /// Language pairs; the default registry when absent.
    #[serde(default)]
    pub pairs: Option<Vec<PairSpec>>,
    pub decoder: DecoderBinding,
    /// SHA-256 of the config file bytes; set when loading from a file.
    #[serde(skip)]
    pub config_hash: String,
}

impl PipelineConfig {
    pub fn from_path(path: &Path) -> Result<Self, SemisupError> {
        let bytes = fs::read(path)?;
        let mut cfg: PipelineConfig = serde_json::from_slice(&bytes)?;
        if cfg.passes == 0 {
            return Err(SemisupError::Config("passes must be at least 1".into()));
        }
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.corpus = resolve(base, &cfg.corpus);
        cfg.mant_manifest = resolve(base, &cfg.mant_manifest);
        cfg.ood_manifest = cfg.ood_manifest.as_ref().map(|p| resolve(base, p));
        cfg.untranscribed_manifest = resolve(base, &cfg.untranscribed_manifest);
        cfg.run_dir = resolve(base, &cfg.run_dir);
        if let DecoderBinding::Sim { truth_corpus, .. } = &mut cfg.decoder {
            *truth_corpus = resolve(base, truth_corpus);
        }
        // The hash identifies the experiment, not its output location: it
        // covers the resolved config with the run directory normalized out.
        let mut canonical = cfg.clone();
        canonical.run_dir = PathBuf::from("<run_dir>");
        cfg.config_hash = hex_digest(serde_json::to_string(&canonical)?.as_bytes());
        Ok(cfg)
    }

    pub fn registry(&self) -> Result<PairRegistry, SemisupError> {
        match &self.pairs {
            Some(pairs) => PairRegistry::new(pairs.clone()),
            None => Ok(PairRegistry::default()),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance record of one pipeline invocation; the only run-dir file with
/// wall-clock content.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub outputs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct PipelineState {
    config_hash: String,
    completed_pass: u32,
    trainer_state: serde_json::Value,
}

/// The reports of a finished (or resumed-to-finish) run.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub reports: Vec<PassReport>,
    pub run_dir: PathBuf,
}

pub fn load_corpus(path: &Path, format: Option<&str>) -> Result<Corpus, SemisupError> {
    let format = match format {
        Some(f) => f.parse::<CorpusFormat>().map_err(SemisupError::Config)?,
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("txt") | Some("tagged") => CorpusFormat::TaggedText,
            _ => CorpusFormat::Jsonl,
        },
    };
    let file = fs::File::open(path)?;
    Ok(Corpus::parse(
        BufReader::new(file),
        format,
        &ParseOptions::default(),
    )?)
}

fn load_manifest(path: &Path, name: &str, source: &str) -> Result<Manifest, SemisupError> {
    let file = fs::File::open(path)?;
    Ok(Manifest::parse(
        BufReader::new(file),
        name,
        Some(source.to_string()),
    )?)
}

fn write_deterministic(path: &Path, bytes: &[u8]) -> Result<(), SemisupError> {
    fs::write(path, bytes)?;
    Ok(())
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Run the semi-supervised loop to completion.
///
/// With `resume`, a partially completed run directory (matching config
/// hash) restarts after its last completed pass; without it, a directory
/// that already holds run state is refused.
pub fn run_pipeline<B>(
    config: &PipelineConfig,
    backend: &mut B,
    resume: bool,
) -> Result<PipelineOutcome, SemisupError>
where
    B: DecoderInterface + TrainerInterface + Sync,
{
    let started = now_ms();
    let registry = config.registry()?;
    let corpus = load_corpus(&config.corpus, config.corpus_format.as_deref())?;
    let source = config.corpus.display().to_string();
    let mant = load_manifest(&config.mant_manifest, "mant", &source)?;
    let ood = config
        .ood_manifest
        .as_ref()
        .map(|p| load_manifest(p, "ood", &source))
        .transpose()?;
    let untr = load_manifest(&config.untranscribed_manifest, "untranscribed", &source)?;
    corpus.resolve(&mant)?;
    if let Some(o) = &ood {
        corpus.resolve(o)?;
    }
    let untr_utts: Vec<&Utterance> = {
        let mut utts: Vec<&Utterance> =
            corpus.resolve(&untr)?.into_iter().map(|(u, _)| u).collect();
        utts.sort_by(|a, b| a.id.cmp(&b.id));
        utts
    };

    fs::create_dir_all(&config.run_dir)?;
    let state_path = config.run_dir.join("state.json");
    let mut completed = 0u32;
    let mut reports: Vec<PassReport> = Vec::new();
    let mut autot_prev_manifest = Manifest::new("autot.pass0", Some(source.clone()), Vec::new());
    let mut autot_prev_transcripts: HashMap<String, Vec<Token>> = HashMap::new();

    if state_path.exists() {
        if !resume {
            return Err(SemisupError::Config(format!(
                "run directory `{}` already holds a run; resume it or use a fresh directory",
                config.run_dir.display()
            )));
        }
        let state: PipelineState = serde_json::from_slice(&fs::read(&state_path)?)?;
        if state.config_hash != config.config_hash {
            return Err(SemisupError::Config(
                "saved run was produced by a different config".into(),
            ));
        }
        completed = state.completed_pass.min(config.passes);
        backend.restore(&state.trainer_state)?;
        for p in 1..=completed {
            let report_path = config.run_dir.join(format!("report.pass{p}.json"));
            let report: PassReport = serde_json::from_slice(&fs::read(&report_path)?)?;
            reports.push(report);
        }
        if completed >= 1 {
            let p = completed;
            autot_prev_manifest = load_manifest(
                &config.run_dir.join(format!("autot.pass{p}.manifest")),
                &format!("autot.pass{p}"),
                &source,
            )?;
            let hyp_corpus = load_corpus(
                &config.run_dir.join(format!("autot.pass{p}.jsonl")),
                Some("jsonl"),
            )?;
            autot_prev_transcripts = hyp_corpus
                .utterances()
                .iter()
                .map(|u| (u.id.clone(), u.tokens.clone()))
                .collect();
        }
    }

    let mut outputs: Vec<String> = Vec::new();
    for pass in completed + 1..=config.passes {
        // (1) Transcriber training set: ManT + OOD + AutoT@(pass-1).
        let mut parts: Vec<&Manifest> = vec![&mant];
        if let Some(o) = &ood {
            parts.push(o);
        }
        parts.push(&autot_prev_manifest);
        let transcriber_manifest = Manifest::union(&parts)?;
        let name = format!("trainset.autot-model.pass{pass}.manifest");
        write_manifest(&config.run_dir.join(&name), &transcriber_manifest)?;
        outputs.push(name);

        // (2) Train the transcriber.
        let transcriber_summary = backend.train(
            ModelRole::Transcriber,
            pass,
            &TrainSet {
                manifest: &transcriber_manifest,
                corpus: &corpus,
                autot_transcripts: &autot_prev_transcripts,
            },
        )?;

        // (3) Decode every untranscribed utterance with every pair decoder.
        let decoder: &B = backend;
        let groups: Vec<Vec<DecodeResult>> = untr_utts
            .par_iter()
            .map(|u| {
                registry
                    .pairs()
                    .iter()
                    .map(|p| decoder.decode(u, &p.id))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;

        // (4) Assign, threshold, filter.
        let assignment = assign_all(&groups, &registry)?;
        let thresholds = compute_thresholds(&assignment);
        let active = config.policy.filter_active(pass);
        let retained = filter_assignment(&assignment, &thresholds, active);

        // (5) Emit AutoT@pass manifest and transcripts.
        let mut kept: Vec<&DecodeResult> = retained.values().flatten().copied().collect();
        kept.sort_by(|a, b| a.utt_id.cmp(&b.utt_id));
        let autot_manifest = Manifest::new(
            &format!("autot.pass{pass}"),
            Some(source.clone()),
            kept.iter()
                .map(|r| ManifestEntry {
                    utt_id: r.utt_id.clone(),
                    provenance: Provenance::AutoT(pass),
                })
                .collect(),
        );
        let name = format!("autot.pass{pass}.manifest");
        write_manifest(&config.run_dir.join(&name), &autot_manifest)?;
        outputs.push(name);

        let hyp_utts: Vec<Utterance> = kept
            .iter()
            .map(|r| {
                let orig = corpus.get(&r.utt_id).expect("resolved earlier");
                Utterance {
                    id: r.utt_id.clone(),
                    speaker: orig.speaker.clone(),
                    duration_s: orig.duration_s,
                    tokens: r.hyp_tokens.clone(),
                }
            })
            .collect();
        let hyp_corpus = Corpus::new(corpus.languages().clone(), hyp_utts)?;
        let name = format!("autot.pass{pass}.jsonl");
        {
            let file = fs::File::create(config.run_dir.join(&name))?;
            hyp_corpus.write_jsonl(BufWriter::new(file))?;
        }
        outputs.push(name);
        let autot_transcripts: HashMap<String, Vec<Token>> = kept
            .iter()
            .map(|r| (r.utt_id.clone(), r.hyp_tokens.clone()))
            .collect();

        // (6) Recognizer training set: ManT + AutoT@pass, no OOD.
        let recognizer_manifest = Manifest::union(&[&mant, &autot_manifest])?;
        debug_assert!(recognizer_manifest
            .entries()
            .iter()
            .all(|e| e.provenance != Provenance::Ood));
        let name = format!("trainset.asr.pass{pass}.manifest");
        write_manifest(&config.run_dir.join(&name), &recognizer_manifest)?;
        outputs.push(name);

        let recognizer_summary = backend.train(
            ModelRole::Recognizer,
            pass,
            &TrainSet {
                manifest: &recognizer_manifest,
                corpus: &corpus,
                autot_transcripts: &autot_transcripts,
            },
        )?;

        // (7) Report and state.
        let mut report = pass_report(
            pass,
            config.policy,
            &registry,
            &assignment,
            &thresholds,
            &retained,
            |id| corpus.get(id).map_or(0.0, |u| u.duration_s),
        );
        debug_assert_eq!(report.total_assigned, untr_utts.len());
        report.transcriber_trainset = transcriber_manifest.len();
        report.recognizer_trainset = recognizer_manifest.len();
        report.train_summaries = vec![
            serde_json::to_value(&transcriber_summary)?,
            serde_json::to_value(&recognizer_summary)?,
        ];
        let name = format!("report.pass{pass}.json");
        write_deterministic(
            &config.run_dir.join(&name),
            format!("{}\n", serde_json::to_string_pretty(&report)?).as_bytes(),
        )?;
        outputs.push(name);
        reports.push(report);

        let state = PipelineState {
            config_hash: config.config_hash.clone(),
            completed_pass: pass,
            trainer_state: backend.snapshot(),
        };
        write_deterministic(
            &state_path,
            format!("{}\n", serde_json::to_string_pretty(&state)?).as_bytes(),
        )?;

        autot_prev_manifest = autot_manifest;
        autot_prev_transcripts = autot_transcripts;
    }

    let record = RunRecord {
        command: "pipeline run".into(),
        config_hash: config.config_hash.clone(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outputs,
    };
    write_deterministic(
        &config.run_dir.join("run.json"),
        format!("{}\n", serde_json::to_string_pretty(&record)?).as_bytes(),
    )?;

    Ok(PipelineOutcome {
        reports,
        run_dir: config.run_dir.clone(),
    })
}

fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), SemisupError> {
    let mut buf = Vec::new();
    manifest.write(&mut buf)?;
    write_deterministic(path, &buf)
}
