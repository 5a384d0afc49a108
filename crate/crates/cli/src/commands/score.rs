//! `cswitch score`

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use cswitch_core::ngram::Vocabulary;
use cswitch_core::scoring::{align_corpora, score, ScoreReport};

use crate::output::{pct1, print_json, print_table, rate_cell};
use crate::{io, CliError, OutputMode};

#[derive(Args)]
pub struct ScoreArgs {
    /// Reference transcripts (language-tagged).
    #[arg(long, name = "ref")]
    pub r#ref: PathBuf,
    /// Hypothesis transcripts; ids must match the references.
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Closed vocabulary used to look up hypothesis word languages; built
    /// from the reference and hypothesis tokens when omitted.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Also report the switch-point accuracy rows.
    #[arg(long)]
    pub switch_metrics: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    notes: Vec<&'static str>,
    #[serde(flatten)]
    score: &'a ScoreReport,
}

const NOTES: [&str; 3] = [
    "WER pools error and reference counts over all utterances before dividing",
    "insertions are attributed to the language of the nearest preceding reference token",
    "hypothesis words outside the vocabulary count as language `und` and are never language-correct",
];

pub fn run(args: ScoreArgs, mode: OutputMode) -> Result<(), CliError> {
    let refs = io::load_corpus(&args.r#ref, args.format.as_deref())?;
    let hyps = io::load_corpus(&args.hyp, args.format.as_deref())?;
    let vocab = match &args.vocab {
        Some(p) => io::load_vocab(p)?,
        None => Vocabulary::from_utterances(refs.utterances().iter().chain(hyps.utterances())),
    };
    let pairs = align_corpora(refs.utterances(), hyps.utterances())?;
    let report = score(&pairs, &vocab)?;

    if mode.json {
        return print_json(&Report {
            notes: NOTES.to_vec(),
            score: &report,
        });
    }

    for note in NOTES {
        println!("# {note}");
    }
    let mut headers: Vec<String> = vec!["WER".into()];
    let mut cells: Vec<String> = vec![pct1(report.overall.wer_pct())];
    let mut count_cells: Vec<String> = vec![format!(
        "S={} D={} I={} N={}",
        report.overall.sub, report.overall.del, report.overall.ins, report.overall.n_ref
    )];
    for (lang, c) in &report.per_lang {
        headers.push(format!("WER_{lang}"));
        // A language can accumulate insertions without owning any reference
        // tokens; its rate is then undefined and shown as absent.
        cells.push(if c.n_ref > 0 {
            pct1(c.wer_pct())
        } else {
            "-".into()
        });
        count_cells.push(format!("S={} D={} I={} N={}", c.sub, c.del, c.ins, c.n_ref));
    }
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    print_table(&header_refs, &[cells, count_cells]);

    if args.switch_metrics {
        println!();
        let mut rows: Vec<Vec<String>> = Vec::new();
        for (lang, r) in &report.token_correct {
            rows.push(vec![
                format!("{lang} token correct"),
                rate_cell(r.num, r.den),
            ]);
        }
        match &report.switch {
            Some(sm) => {
                rows.push(vec![
                    "Word correct after switch".into(),
                    rate_cell(sm.word_correct.num, sm.word_correct.den),
                ]);
                for (lang, r) in &sm.word_correct_per_lang {
                    rows.push(vec![
                        format!("{lang} word correct after switch"),
                        rate_cell(r.num, r.den),
                    ]);
                }
                rows.push(vec![
                    "Language correct after switch".into(),
                    rate_cell(sm.lang_correct.num, sm.lang_correct.den),
                ]);
                rows.push(vec![
                    "Code-switch bigram correct".into(),
                    rate_cell(sm.bigram_correct.num, sm.bigram_correct.den),
                ]);
            }
            None => {
                rows.push(vec![
                    "(no switch points in the references)".into(),
                    "-".into(),
                ]);
            }
        }
        print_table(&["Accuracy (%)", "Value"], &rows);
    }
    Ok(())
}
