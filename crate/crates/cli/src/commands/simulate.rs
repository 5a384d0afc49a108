//! `cswitch simulate decode` and `cswitch simulate serve`

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;

use cswitch_core::decoder_sim::{SimBackend, SimParams};
use cswitch_core::semisup::{serve_lines, DecoderInterface, PairId, PairRegistry};

use crate::output::print_json;
use crate::{io, CliError, OutputMode};

#[derive(Args)]
pub struct SimDecodeArgs {
    /// Corpus with ground-truth transcripts (hidden from the pipeline; the
    /// simulator corrupts them).
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Decode only the utterances named by this manifest (default: all).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Simulator parameter file (JSON); defaults apply when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// RNG seed; required, and overrides the seed in the parameter file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pair decoders to run, e.g. `EZ,EX`; default: all registered pairs.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub pairs: Vec<String>,
    /// Output decode dump (one JSON line per utterance and pair); `-` for
    /// standard output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimServeArgs {
    /// Corpus with ground-truth transcripts.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Simulator parameter file (JSON).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// RNG seed; required, and overrides the seed in the parameter file.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn load_params(path: Option<&PathBuf>, seed: Option<u64>) -> Result<SimParams, CliError> {
    let Some(seed) = seed else {
        return Err(CliError::Usage(
            "the simulator is randomized: an explicit --seed is required".into(),
        ));
    };
    let mut params = match path {
        Some(p) => {
            let value: serde_json::Value = serde_json::from_slice(
                &fs::read(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
            )?;
            SimParams::from_value(&value)?
        }
        None => SimParams::default(),
    };
    params.seed = seed;
    Ok(params)
}

pub fn decode(args: SimDecodeArgs, mode: OutputMode) -> Result<(), CliError> {
    let params = load_params(args.params.as_ref(), args.seed)?;
    let truth = io::load_corpus(&args.truth, args.format.as_deref())?;
    let registry = PairRegistry::default();
    let pairs: Vec<PairId> = if args.pairs.is_empty() {
        registry.pairs().iter().map(|p| p.id.clone()).collect()
    } else {
        args.pairs
            .iter()
            .map(|p| {
                let id = PairId::new(p)?;
                if registry.get(&id).is_none() {
                    return Err(cswitch_core::semisup::SemisupError::Config(format!(
                        "unregistered pair `{p}`"
                    )));
                }
                Ok(id)
            })
            .collect::<Result<_, _>>()?
    };
    let ids: Vec<String> = match &args.manifest {
        Some(p) => io::load_manifest(p)?
            .entries()
            .iter()
            .map(|e| e.utt_id.clone())
            .collect(),
        None => truth.utterances().iter().map(|u| u.id.clone()).collect(),
    };

    let backend = SimBackend::new(truth.clone(), registry, params)?;
    let mut sink: Box<dyn Write> = if args.out.as_os_str() == "-" {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(BufWriter::new(fs::File::create(&args.out)?))
    };
    let mut written = 0usize;
    for id in &ids {
        let utt = truth
            .get(id)
            .ok_or_else(|| CliError::Data(format!("utterance `{id}` not in truth corpus")))?;
        for pair in &pairs {
            let result = backend.decode(utt, pair)?;
            writeln!(sink, "{}", result.to_json_line())?;
            written += 1;
        }
    }
    sink.flush()?;
    drop(sink);

    if mode.json {
        return print_json(&serde_json::json!({
            "utterances": ids.len(),
            "pairs": pairs.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "decodes": written,
            "out": args.out.display().to_string(),
        }));
    }
    if args.out.as_os_str() != "-" {
        println!(
            "decoded {} utterances with {} pair decoders -> {}",
            ids.len(),
            pairs.len(),
            args.out.display()
        );
    }
    Ok(())
}

pub fn serve(args: SimServeArgs, _mode: OutputMode) -> Result<(), CliError> {
    let params = load_params(args.params.as_ref(), args.seed)?;
    let truth = io::load_corpus(&args.truth, args.format.as_deref())?;
    let backend = SimBackend::new(truth.clone(), PairRegistry::default(), params)?;
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout().lock();
    serve_lines(&backend, &truth, stdin, stdout)?;
    Ok(())
}
