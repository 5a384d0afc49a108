//! `cswitch train-lm`

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use cswitch_core::ngram::{train, write_arpa, Smoothing, TrainConfig, Vocabulary};

use crate::output::print_json;
use crate::{io, CliError, OutputMode};

#[derive(Args)]
pub struct TrainLmArgs {
    /// Training corpus (JSONL or tagged text).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Train only on the utterances named by this manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// N-gram order, 1..=5.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// `kneser-ney` (default) or `witten-bell`.
    #[arg(long, default_value = "kneser-ney")]
    pub smoothing: String,
    /// Fail instead of falling back to Witten-Bell when Kneser-Ney
    /// count-of-count statistics are degenerate.
    #[arg(long)]
    pub no_fallback: bool,
    /// Closed vocabulary file (`word<TAB>lang`); built from the training
    /// text when omitted.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Write the vocabulary actually used to this file.
    #[arg(long)]
    pub write_vocab: Option<PathBuf>,
    /// Output ARPA file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct TrainReport {
    order: usize,
    smoothing_requested: String,
    smoothing_used: String,
    vocab_size: usize,
    ngram_counts: Vec<usize>,
    out: String,
}

pub fn run(args: TrainLmArgs, mode: OutputMode) -> Result<(), CliError> {
    let smoothing: Smoothing = args.smoothing.parse().map_err(CliError::Usage)?;
    let corpus = io::load_corpus(&args.corpus, args.format.as_deref())?;
    let manifest = args
        .manifest
        .as_deref()
        .map(io::load_manifest)
        .transpose()?;
    let utterances: Vec<_> = match &manifest {
        Some(m) => corpus
            .resolve(m)
            .map_err(CliError::from)?
            .into_iter()
            .map(|(u, _)| u.clone())
            .collect(),
        None => corpus.utterances().to_vec(),
    };
    let vocab = match &args.vocab {
        Some(path) => io::load_vocab(path)?,
        None => Vocabulary::from_utterances(&utterances),
    };
    let model = train(
        &utterances,
        &TrainConfig {
            order: args.order,
            smoothing,
            auto_fallback: !args.no_fallback,
        },
        &vocab,
    )?;
    if let Some(path) = &args.write_vocab {
        let file = fs::File::create(path)?;
        vocab.write(BufWriter::new(file))?;
    }
    let file = fs::File::create(&args.out)?;
    write_arpa(&model, BufWriter::new(file))?;

    let report = TrainReport {
        order: model.order(),
        smoothing_requested: smoothing.to_string(),
        smoothing_used: model.smoothing().to_string(),
        vocab_size: vocab.size(),
        ngram_counts: model.ngram_counts(),
        out: args.out.display().to_string(),
    };
    if mode.json {
        return print_json(&report);
    }
    println!(
        "trained {}-gram model ({} smoothing) over {} words",
        report.order, report.smoothing_used, report.vocab_size
    );
    if report.smoothing_used != report.smoothing_requested {
        println!(
            "note: fell back from {} (count-of-count statistics too sparse)",
            report.smoothing_requested
        );
    }
    for (k, n) in report.ngram_counts.iter().enumerate() {
        println!("  {}-grams: {n}", k + 1);
    }
    println!("wrote {}", report.out);
    Ok(())
}
