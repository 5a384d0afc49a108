//! `cswitch pipeline run`

use std::path::PathBuf;
use std::time::Duration;

use clap::Args;

use cswitch_core::decoder_sim::{SimBackend, SimParams};
use cswitch_core::semisup::{
    load_corpus, run_pipeline, DecodeResult, DecoderBinding, DecoderInterface, ExternalDecoder,
    ModelRole, NoopTrainer, PairId, PassReport, PipelineConfig, PipelineOutcome, SemisupError,
    TrainSet, TrainSummary, TrainerInterface,
};

use crate::output::{num1, print_json, print_table};
use crate::{CliError, OutputMode};

#[derive(Args)]
pub struct PipelineRunArgs {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Continue a partially completed run in the same run directory.
    #[arg(long)]
    pub resume: bool,
}

/// External decoder plus its out-of-band trainer.
struct ExternalBackend {
    decoder: ExternalDecoder,
    trainer: NoopTrainer,
}

impl DecoderInterface for ExternalBackend {
    fn decode(
        &self,
        utterance: &cswitch_core::corpus::Utterance,
        pair: &PairId,
    ) -> Result<DecodeResult, SemisupError> {
        self.decoder.decode(utterance, pair)
    }
}

impl TrainerInterface for ExternalBackend {
    fn train(
        &mut self,
        role: ModelRole,
        pass: u32,
        trainset: &TrainSet<'_>,
    ) -> Result<TrainSummary, SemisupError> {
        self.trainer.train(role, pass, trainset)
    }
}

pub fn run(args: PipelineRunArgs, mode: OutputMode) -> Result<(), CliError> {
    let config = PipelineConfig::from_path(&args.config)?;
    let outcome = match &config.decoder {
        DecoderBinding::Sim {
            truth_corpus,
            params,
        } => {
            let truth = load_corpus(truth_corpus, None)?;
            let mut sim_params = SimParams::from_value(params)?;
            // One seed governs the whole run.
            sim_params.seed = config.seed;
            let registry = config.registry()?;
            let mut backend = SimBackend::new(truth, registry, sim_params)?;
            run_pipeline(&config, &mut backend, args.resume)?
        }
        DecoderBinding::External { cmd, timeout_s } => {
            let decoder = ExternalDecoder::spawn(cmd, Duration::from_secs(*timeout_s))?;
            let mut backend = ExternalBackend {
                decoder,
                trainer: NoopTrainer,
            };
            run_pipeline(&config, &mut backend, args.resume)?
        }
    };
    report(&outcome, mode)
}

fn report(outcome: &PipelineOutcome, mode: OutputMode) -> Result<(), CliError> {
    if mode.json {
        return print_json(&outcome.reports);
    }
    for r in &outcome.reports {
        print_pass_report(r);
        println!();
    }
    println!("run directory: {}", outcome.run_dir.display());
    Ok(())
}

/// Pass summary table: one row per pass-and-policy with per-pair retained
/// counts and the total with hours.
pub fn print_pass_report(r: &PassReport) {
    let mut headers: Vec<String> = vec!["Pass".into(), "Policy".into()];
    let mut row: Vec<String> = vec![r.pass.to_string(), r.policy.to_string()];
    for p in &r.pairs {
        headers.push(p.pair.to_string());
        row.push(p.retained.to_string());
    }
    headers.push("TOTAL".into());
    row.push(format!(
        "{} ({} h)",
        r.total_retained,
        num1(r.total_retained_duration_s / 3600.0)
    ));
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    print_table(&header_refs, &[row]);
    if r.filter_active {
        let thresholds: Vec<String> = r
            .pairs
            .iter()
            .map(|p| match p.threshold {
                Some(t) => format!("{}={t:.4}", p.pair),
                None => format!("{}=-", p.pair),
            })
            .collect();
        println!(
            "thresholds (mean assigned confidence): {}",
            thresholds.join("  ")
        );
        println!(
            "assigned {} of which retained {}",
            r.total_assigned, r.total_retained
        );
    }
}
