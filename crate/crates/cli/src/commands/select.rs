//! `cswitch select`

use std::fs;
use std::io::{BufRead, BufReader, BufWriter};
use std::path::PathBuf;

use clap::Args;

use cswitch_core::corpus::{Corpus, Manifest, ManifestEntry, Provenance, Utterance};
use cswitch_core::semisup::{
    assign_all, compute_thresholds, filter_assignment, pass_report, DecodeResult, PairRegistry,
    ThresholdPolicy,
};

use crate::commands::pipeline::print_pass_report;
use crate::output::print_json;
use crate::{io, CliError, OutputMode};

#[derive(Args)]
pub struct SelectArgs {
    /// Decode dump: one decode-result JSON object per line, one entry per
    /// (utterance, pair).
    #[arg(long)]
    pub decodes: PathBuf,
    /// Threshold policy: nt, tp1 or tp1p2.
    #[arg(long)]
    pub threshold_mode: String,
    /// Which pass this selection belongs to (drives whether the policy
    /// filters).
    #[arg(long)]
    pub pass: u32,
    /// Corpus providing durations and speakers for the retained utterances.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory for the manifest, transcripts and report.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: SelectArgs, mode: OutputMode) -> Result<(), CliError> {
    let policy: ThresholdPolicy = args.threshold_mode.parse().map_err(CliError::Usage)?;
    if args.pass == 0 {
        return Err(CliError::Usage("--pass starts at 1".into()));
    }
    let corpus = io::load_corpus(&args.corpus, args.format.as_deref())?;

    // Group decode results by utterance, preserving first-seen order.
    let file = fs::File::open(&args.decodes)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.decodes.display())))?;
    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<DecodeResult>> =
        std::collections::HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let result = DecodeResult::from_json_line(&line)
            .map_err(|e| CliError::Data(format!("decode line {}: {e}", idx + 1)))?;
        if !groups.contains_key(&result.utt_id) {
            order.push(result.utt_id.clone());
        }
        groups
            .entry(result.utt_id.clone())
            .or_default()
            .push(result);
    }
    let per_utterance: Vec<Vec<DecodeResult>> = order
        .iter()
        .map(|id| groups.remove(id).expect("grouped above"))
        .collect();

    let registry = PairRegistry::default();
    let assignment = assign_all(&per_utterance, &registry)?;
    let thresholds = compute_thresholds(&assignment);
    let active = policy.filter_active(args.pass);
    let retained = filter_assignment(&assignment, &thresholds, active);

    fs::create_dir_all(&args.out_dir)?;
    let mut kept: Vec<&DecodeResult> = retained.values().flatten().copied().collect();
    kept.sort_by(|a, b| a.utt_id.cmp(&b.utt_id));
    let manifest = Manifest::new(
        &format!("autot.pass{}", args.pass),
        None,
        kept.iter()
            .map(|r| ManifestEntry {
                utt_id: r.utt_id.clone(),
                provenance: Provenance::AutoT(args.pass),
            })
            .collect(),
    );
    let manifest_path = args
        .out_dir
        .join(format!("autot.pass{}.manifest", args.pass));
    {
        let f = fs::File::create(&manifest_path)?;
        manifest.write(BufWriter::new(f))?;
    }
    let hyp_utts: Vec<Utterance> = kept
        .iter()
        .map(|r| {
            let orig = corpus.get(&r.utt_id).ok_or_else(|| {
                CliError::Data(format!("decoded utterance `{}` not in corpus", r.utt_id))
            })?;
            Ok(Utterance {
                id: r.utt_id.clone(),
                speaker: orig.speaker.clone(),
                duration_s: orig.duration_s,
                tokens: r.hyp_tokens.clone(),
            })
        })
        .collect::<Result<_, CliError>>()?;
    let hyp_corpus = Corpus::new(corpus.languages().clone(), hyp_utts)?;
    let transcript_path = args.out_dir.join(format!("autot.pass{}.jsonl", args.pass));
    {
        let f = fs::File::create(&transcript_path)?;
        hyp_corpus.write_jsonl(BufWriter::new(f))?;
    }

    let report = pass_report(
        args.pass,
        policy,
        &registry,
        &assignment,
        &thresholds,
        &retained,
        |id| corpus.get(id).map_or(0.0, |u| u.duration_s),
    );
    fs::write(
        args.out_dir.join(format!("report.pass{}.json", args.pass)),
        format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;

    if mode.json {
        return print_json(&report);
    }
    print_pass_report(&report);
    println!(
        "wrote {} and {}",
        manifest_path.display(),
        transcript_path.display()
    );
    Ok(())
}
