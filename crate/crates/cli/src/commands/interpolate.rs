//! `cswitch interpolate`

use std::fs;
use std::path::PathBuf;

use clap::Args;

use cswitch_core::ngram::fit_weights;

use crate::io::MixtureFile;
use crate::output::print_json;
use crate::{io, CliError, OutputMode};

#[derive(Args)]
pub struct InterpolateArgs {
    /// Component models (ARPA or mixture files), at least two.
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    pub models: Vec<PathBuf>,
    /// Development text whose perplexity the weights minimize.
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Vocabulary applied when reading ARPA components.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output mixture file (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: InterpolateArgs, mode: OutputMode) -> Result<(), CliError> {
    if args.models.len() < 2 {
        return Err(CliError::Usage(
            "interpolation needs at least two --models".into(),
        ));
    }
    let vocab = args.vocab.as_deref().map(io::load_vocab).transpose()?;
    let components = args
        .models
        .iter()
        .map(|p| io::load_model(p, vocab.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let dev = io::load_corpus(&args.dev, args.format.as_deref())?;
    let (_mixture, report) = fit_weights(components, dev.utterances())?;

    let file = MixtureFile {
        components: args
            .models
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        weights: report.weights.clone(),
        dev_perplexity: Some(report.dev_perplexity),
        iterations: Some(report.iterations),
    };
    fs::write(
        &args.out,
        format!("{}\n", serde_json::to_string_pretty(&file)?),
    )?;

    if mode.json {
        return print_json(&file);
    }
    println!("fitted weights on {} dev positions:", report.n_positions);
    for (path, w) in args.models.iter().zip(&report.weights) {
        println!("  {:<40} {:.6}", path.display().to_string(), w);
    }
    println!(
        "dev perplexity {:.4} after {} EM updates",
        report.dev_perplexity, report.iterations
    );
    println!("wrote {}", args.out.display());
    Ok(())
}
