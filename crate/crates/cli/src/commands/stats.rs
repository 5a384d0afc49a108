//! `cswitch stats`

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use cswitch_core::corpus::{minutes, CorpusStats, StatsOptions};

use crate::output::{num1, print_json, print_table};
use crate::{io, CliError, OutputMode};

#[derive(Args)]
pub struct StatsArgs {
    /// Corpus file (JSONL or tagged text).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus format: `jsonl` or `tagged-text`; inferred from the extension
    /// when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Restrict to the utterances named by this manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Count the duration of untranscribed utterances (reported on their
    /// own row; they carry no language).
    #[arg(long)]
    pub include_untranscribed: bool,
}

#[derive(Serialize)]
struct StatsReport<'a> {
    notes: Vec<&'static str>,
    #[serde(flatten)]
    stats: &'a CorpusStats,
}

const NOTES: [&str; 2] = [
    "code-switched utterances credit their full duration to the CS column of every language present",
    "types are distinct NFC-normalized surface forms counted per language, case-sensitively",
];

pub fn run(args: StatsArgs, mode: OutputMode) -> Result<(), CliError> {
    let corpus = io::load_corpus(&args.corpus, args.format.as_deref())?;
    let manifest = args
        .manifest
        .as_deref()
        .map(io::load_manifest)
        .transpose()?;
    let stats = corpus.stats(
        manifest.as_ref(),
        StatsOptions {
            include_untranscribed: args.include_untranscribed,
        },
    )?;

    if mode.json {
        return print_json(&StatsReport {
            notes: NOTES.to_vec(),
            stats: &stats,
        });
    }

    for note in NOTES {
        println!("# {note}");
    }
    let mut rows: Vec<Vec<String>> = stats
        .rows
        .iter()
        .map(|r| {
            vec![
                r.lang.to_string(),
                num1(minutes(r.mono_s)),
                num1(minutes(r.cs_s)),
                num1(minutes(r.subtotal_s())),
                r.tokens.to_string(),
                r.types.to_string(),
            ]
        })
        .collect();
    if let Some(untr) = stats.untranscribed_s {
        rows.push(vec![
            "(untranscribed)".into(),
            "-".into(),
            "-".into(),
            num1(minutes(untr)),
            "-".into(),
            "-".into(),
        ]);
    }
    let total_sub = stats.total_mono_s + stats.total_cs_s + stats.untranscribed_s.unwrap_or(0.0);
    rows.push(vec![
        "Total".into(),
        num1(minutes(stats.total_mono_s)),
        num1(minutes(stats.total_cs_s)),
        num1(minutes(total_sub)),
        stats.total_tokens.to_string(),
        stats.total_types.to_string(),
    ]);
    print_table(
        &[
            "Language",
            "Mono (m)",
            "CS (m)",
            "Subtotal (m)",
            "Word tokens",
            "Word types",
        ],
        &rows,
    );
    println!(
        "{} utterances ({} code-switched)",
        stats.utterances, stats.code_switched_utterances
    );
    Ok(())
}
