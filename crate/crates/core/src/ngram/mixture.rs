//! Linear interpolation of language models with EM-fitted weights.
//!
//! `P_mix(w|h) = sum_m lambda_m * P_m(w|h)`. Weights are fitted on a
//! development text by EM over the mixture likelihood: uniform
//! initialization, responsibilities in the E-step, weight re-estimation in
//! the M-step, stopping when the per-word log-likelihood improves by less
//! than 1e-6 or after 100 updates. Components may themselves be mixtures,
//! so pairwise re-interpolation composes.

use super::{score_utterance, LanguageModel, NgramError, Vocabulary};
use crate::corpus::Utterance;

/// A weighted linear mixture of language models over one shared vocabulary.
pub struct MixtureLM {
    components: Vec<Box<dyn LanguageModel>>,
    weights: Vec<f64>,
}

impl std::fmt::Debug for MixtureLM {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixtureLM")
            .field("components", &self.components.len())
            .field("weights", &self.weights)
            .finish()
    }
}

impl MixtureLM {
    /// Weights must be non-negative and sum to 1 within 1e-12; all
    /// components must share one vocabulary.
    pub fn new(
        components: Vec<Box<dyn LanguageModel>>,
        weights: Vec<f64>,
    ) -> Result<Self, NgramError> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(NgramError::InvalidInput(
                "mixture needs one weight per component".into(),
            ));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(NgramError::InvalidInput(
                "mixture weights must be non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(NgramError::InvalidInput(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        let vocab = components[0].vocab();
        if components.iter().skip(1).any(|c| c.vocab() != vocab) {
            return Err(NgramError::VocabMismatch);
        }
        Ok(MixtureLM {
            components,
            weights,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Box<dyn LanguageModel>] {
        &self.components
    }
}

impl LanguageModel for MixtureLM {
    fn vocab(&self) -> &Vocabulary {
        self.components[0].vocab()
    }

    fn logprob(&self, context: &[&str], word: &str) -> Result<f64, NgramError> {
        // log-sum-exp over the positively weighted components; zero-weight
        // components are skipped so a degenerate mixture equals its single
        // live component exactly.
        let mut terms: Vec<f64> = Vec::with_capacity(self.components.len());
        for (c, &w) in self.components.iter().zip(&self.weights) {
            if w > 0.0 {
                terms.push(w.ln() + c.logprob(context, word)?);
            }
        }
        if terms.len() == 1 {
            let single = terms[0]
                - self
                    .weights
                    .iter()
                    .find(|w| **w > 0.0)
                    .expect("one live component")
                    .ln();
            return Ok(single);
        }
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln())
    }
}

/// Outcome of an EM weight fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Fitted weights, one per component.
    pub weights: Vec<f64>,
    /// Number of EM weight updates applied.
    pub iterations: usize,
    /// Total dev log-likelihood before each update and after the last; EM
    /// guarantees this is non-decreasing.
    pub ll_trace: Vec<f64>,
    /// Development-set perplexity under the fitted mixture.
    pub dev_perplexity: f64,
    /// Scored dev positions.
    pub n_positions: usize,
}

const EM_MAX_ITERS: usize = 100;
const EM_TOL_PER_WORD: f64 = 1e-6;

/// Fit mixture weights on a development text by EM.
pub fn fit_weights(
    components: Vec<Box<dyn LanguageModel>>,
    dev: &[Utterance],
) -> Result<(MixtureLM, FitReport), NgramError> {
    if components.len() < 2 {
        return Err(NgramError::InvalidInput(
            "interpolation needs at least two components".into(),
        ));
    }
    let vocab = components[0].vocab();
    if components.iter().skip(1).any(|c| c.vocab() != vocab) {
        return Err(NgramError::VocabMismatch);
    }

    // Per-position component log-probabilities, flattened over utterances.
    let m = components.len();
    let mut logprob_rows: Vec<Vec<f64>> = Vec::new();
    {
        let mut per_component: Vec<Vec<f64>> = Vec::with_capacity(m);
        for c in &components {
            let mut flat = Vec::new();
            for u in dev {
                if let Some(s) = score_utterance(c.as_ref(), u)? {
                    flat.extend_from_slice(&s.word_logprobs);
                    flat.push(s.eos_logprob);
                }
            }
            per_component.push(flat);
        }
        let n = per_component[0].len();
        if n == 0 {
            return Err(NgramError::EmptyEvalSet);
        }
        for i in 0..n {
            logprob_rows.push(per_component.iter().map(|col| col[i]).collect());
        }
    }
    let n = logprob_rows.len();

    let mut weights = vec![1.0 / m as f64; m];
    let mut ll_trace: Vec<f64> = Vec::new();
    let mut iterations = 0usize;

    loop {
        // E-step quantities under the current weights.
        let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let mut ll = 0.0;
        let mut resp_sums = vec![0.0f64; m];
        for row in &logprob_rows {
            let mut best = f64::NEG_INFINITY;
            for j in 0..m {
                if weights[j] > 0.0 {
                    best = best.max(log_w[j] + row[j]);
                }
            }
            let mut z = 0.0;
            for j in 0..m {
                if weights[j] > 0.0 {
                    z += (log_w[j] + row[j] - best).exp();
                }
            }
            let lse = best + z.ln();
            ll += lse;
            for j in 0..m {
                if weights[j] > 0.0 {
                    resp_sums[j] += (log_w[j] + row[j] - lse).exp();
                }
            }
        }
        let converged = ll_trace
            .last()
            .is_some_and(|prev| ((ll - prev) / n as f64) < EM_TOL_PER_WORD);
        ll_trace.push(ll);
        if converged || iterations >= EM_MAX_ITERS {
            break;
        }
        // M-step.
        weights = resp_sums.iter().map(|r| r / n as f64).collect();
        iterations += 1;
    }

    let ll_final = *ll_trace.last().expect("at least one evaluation");
    // Renormalize away floating-point drift before constructing the mixture.
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let report = FitReport {
        weights: weights.clone(),
        iterations,
        ll_trace,
        dev_perplexity: (-ll_final / n as f64).exp(),
        n_positions: n,
    };
    let mixture = MixtureLM::new(components, weights)?;
    Ok((mixture, report))
}
