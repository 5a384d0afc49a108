//! `cswitch perplexity`

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use cswitch_core::cs_metrics::{cs_perplexity, CsPerplexityReport};
use cswitch_core::ngram::{perplexity, LanguageModel, Perplexity, UnkMapped};

use crate::output::{num1, print_json, print_table};
use crate::{io, CliError, OutputMode};

#[derive(Args)]
pub struct PerplexityArgs {
    /// Model: an ARPA file or a mixture JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluation text (JSONL or tagged text).
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Vocabulary applied when reading ARPA models; needed for per-language
    /// decomposition when the model file carries no languages.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Decompose into monolingual and switch-point perplexities.
    #[arg(long)]
    pub cs: bool,
    /// Map out-of-vocabulary words to `<unk>` instead of failing; the
    /// vocabulary must contain `<unk>`.
    #[arg(long)]
    pub unk: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    notes: Vec<&'static str>,
    pp: f64,
    n_scored: usize,
    total_logprob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cs: Option<&'a CsPerplexityReport>,
}

const NOTES: [&str; 3] = [
    "scored positions are all words plus one sentence-end per utterance; sentence-begin is context only",
    "the first word of each utterance counts as monolingual for its own language",
    "sentence-end positions are excluded from MPP/CPP but included in PP; both totals are reported",
];

pub fn run(args: PerplexityArgs, mode: OutputMode) -> Result<(), CliError> {
    let vocab = args.vocab.as_deref().map(io::load_vocab).transpose()?;
    let model = io::load_model(&args.model, vocab.as_ref())?;
    let model: Box<dyn LanguageModel> = if args.unk {
        Box::new(UnkMapped::new(model)?)
    } else {
        model
    };
    let text = io::load_corpus(&args.text, args.format.as_deref())?;

    let overall: Perplexity = perplexity(model.as_ref(), text.utterances())?;
    let cs = if args.cs {
        Some(cs_perplexity(model.as_ref(), text.utterances())?)
    } else {
        None
    };

    if mode.json {
        return print_json(&Report {
            notes: NOTES.to_vec(),
            pp: overall.pp,
            n_scored: overall.n_scored,
            total_logprob: overall.total_logprob,
            cs: cs.as_ref(),
        });
    }

    match &cs {
        None => {
            println!(
                "PP {}  ({} scored positions, total logprob {:.4})",
                num1(overall.pp),
                overall.n_scored,
                overall.total_logprob
            );
        }
        Some(r) => {
            for note in NOTES {
                println!("# {note}");
            }
            let mut headers: Vec<String> = vec!["PP".into()];
            let mut cells: Vec<String> = vec![num1(r.pp)];
            let mut counts: Vec<String> = vec![r.n_scored.to_string()];
            for (lang, cp) in &r.mpp_per_lang {
                headers.push(format!("MPP_{lang}"));
                cells.push(num1(cp.pp));
                counts.push(cp.positions.to_string());
            }
            headers.push("MPP".into());
            match &r.mpp {
                Some(cp) => {
                    cells.push(num1(cp.pp));
                    counts.push(cp.positions.to_string());
                }
                None => {
                    cells.push("-".into());
                    counts.push("0".into());
                }
            }
            headers.push("CPP".into());
            match &r.cpp {
                Some(cp) => {
                    cells.push(num1(cp.pp));
                    counts.push(cp.positions.to_string());
                }
                None => {
                    cells.push("absent".into());
                    counts.push("0".into());
                }
            }
            let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
            print_table(&header_refs, &[cells, counts]);
            println!("(second row: scored positions per column)");
        }
    }
    Ok(())
}
