//! `cswitch bootstrap`

use std::path::PathBuf;

use clap::Args;

use cswitch_core::scoring::{align_corpora, bootstrap};

use crate::output::{pct1, print_json};
use crate::{io, CliError, OutputMode};

#[derive(Args)]
pub struct BootstrapArgs {
    /// Reference transcripts.
    #[arg(long, name = "ref")]
    pub r#ref: PathBuf,
    /// System A hypotheses.
    #[arg(long)]
    pub hyp_a: PathBuf,
    /// System B hypotheses.
    #[arg(long)]
    pub hyp_b: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// RNG seed; required so runs are reproducible.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of resamples (at least 1000).
    #[arg(long, default_value_t = 10_000)]
    pub resamples: usize,
}

pub fn run(args: BootstrapArgs, mode: OutputMode) -> Result<(), CliError> {
    let Some(seed) = args.seed else {
        return Err(CliError::Usage(
            "bootstrap draws random resamples: an explicit --seed is required".into(),
        ));
    };
    let refs = io::load_corpus(&args.r#ref, args.format.as_deref())?;
    let hyp_a = io::load_corpus(&args.hyp_a, args.format.as_deref())?;
    let hyp_b = io::load_corpus(&args.hyp_b, args.format.as_deref())?;
    let pairs_a = align_corpora(refs.utterances(), hyp_a.utterances())?;
    let pairs_b = align_corpora(refs.utterances(), hyp_b.utterances())?;
    let result = bootstrap(&pairs_a, &pairs_b, args.resamples, seed)?;

    if mode.json {
        return print_json(&result);
    }
    println!(
        "system A WER {}  95% CI [{}, {}]",
        pct1(result.wer_a),
        pct1(result.ci_a.0),
        pct1(result.ci_a.1)
    );
    println!(
        "system B WER {}  95% CI [{}, {}]",
        pct1(result.wer_b),
        pct1(result.ci_b.0),
        pct1(result.ci_b.1)
    );
    println!(
        "delta (A-B) 95% CI [{:.2}, {:.2}]",
        result.delta_ci.0, result.delta_ci.1
    );
    println!(
        "p(A better) = {:.4} over {} resamples (seed {seed})",
        result.p_improvement, result.n_resamples
    );
    Ok(())
}
