//! Parameterized synthetic decoder and trainer.
//!
//! Stands in for acoustic models so the pipeline runs end to end at desk
//! scale with known ground truth. Each decode corrupts the hidden reference
//! transcript with per-pair substitution/deletion/insertion rates scaled by
//! the trainer's error multiplier; confidence is one minus the realized
//! error fraction of the emitted hypothesis (its edit distance to the
//! hidden reference over the reference length, i.e. its realized WER) plus
//! optional gaussian noise, clamped to [0, 1]. Basing confidence on the
//! hypothesis that actually leaves the decoder, rather than on the raw
//! corruption event count, keeps confidence and measured accuracy
//! consistent even when a deletion plus an adjacent insertion collapse
//! into what scores as a single substitution.
//!
//! Corruption sampling order is fixed: per token, one uniform draw decides
//! deletion first, else substitution; an independent draw then decides an
//! insertion after the token. The event draws are keyed by (seed, utterance)
//! only, shared across pair decoders; decoding under the wrong pair then
//! adds forced substitutions on positions the base corruption left clean
//! (`ceil(mismatch_penalty * len)` of them). With equal per-pair
//! multipliers and zero noise this makes the true pair's decode strictly
//! more confident whenever at least one position survives the base
//! corruption, so argmax assignment recovers the true pair. Substitution
//! and insertion words are drawn from the decoding pair's own vocabulary,
//! keyed by (seed, utterance, pair).
//!
//! The trainer update is multiplicative:
//! `m' = m * (1 - gain * h / (h + half_hours))` where `h` are
//! clean-equivalent hours; AutoT hours are downweighted by their label
//! error rate measured against the hidden truth. More clean hours never
//! increase the multiplier. The hidden truth lives only in this module's
//! corpus; the pipeline never reads it.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, Token, Utterance};
use crate::scoring::align;
use crate::semisup::{
    DecodeResult, DecoderInterface, ModelRole, PairId, PairRegistry, SemisupError, TrainSet,
    TrainSummary, TrainerInterface,
};

/// Error channel of one pair decoder.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub sub_rate: f64,
    pub del_rate: f64,
    pub ins_rate: f64,
    pub confidence_noise_sd: f64,
    /// Extra error applied when the decoder's pair is not the utterance's
    /// true pair: `ceil(mismatch_penalty * len)` forced substitutions.
    pub mismatch_penalty: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            sub_rate: 0.1,
            del_rate: 0.05,
            ins_rate: 0.05,
            confidence_noise_sd: 0.0,
            mismatch_penalty: 0.2,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), SemisupError> {
        let rates = [self.sub_rate, self.del_rate, self.ins_rate];
        if rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(SemisupError::Config(
                "corruption rates must lie in [0, 1)".into(),
            ));
        }
        if self.sub_rate + self.del_rate + self.ins_rate >= 1.0 {
            return Err(SemisupError::Config(
                "sub + del + ins rates must sum below 1".into(),
            ));
        }
        if self.confidence_noise_sd < 0.0 {
            return Err(SemisupError::Config(
                "confidence noise must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mismatch_penalty) {
            return Err(SemisupError::Config(
                "mismatch penalty must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Full simulator parameterization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub seed: u64,
    /// Channel used for pairs without an explicit override.
    pub channel: ChannelParams,
    /// Per-pair channel overrides, keyed by pair id.
    pub per_pair: BTreeMap<String, ChannelParams>,
    /// Training improvement gain, in [0, 1).
    pub gain: f64,
    /// Hours at which training yields half its asymptotic improvement.
    pub half_hours: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            seed: 0,
            channel: ChannelParams::default(),
            per_pair: BTreeMap::new(),
            gain: 0.5,
            half_hours: 1.0,
        }
    }
}

impl SimParams {
    pub fn from_value(value: &serde_json::Value) -> Result<Self, SemisupError> {
        let params: SimParams = if value.is_null() {
            SimParams::default()
        } else {
            serde_json::from_value(value.clone())?
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), SemisupError> {
        self.channel.validate()?;
        for c in self.per_pair.values() {
            c.validate()?;
        }
        if !(0.0..1.0).contains(&self.gain) {
            return Err(SemisupError::Config("gain must lie in [0, 1)".into()));
        }
        if self.half_hours <= 0.0 {
            return Err(SemisupError::Config("half_hours must be positive".into()));
        }
        Ok(())
    }

    pub fn channel_for(&self, pair: &PairId) -> &ChannelParams {
        self.per_pair.get(pair.as_str()).unwrap_or(&self.channel)
    }
}

/// Error state of one pair decoder.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PairState {
    /// Multiplies the channel's corruption rates; in (0, 1].
    pub error_multiplier: f64,
    pub hours_seen: f64,
    /// Mean label error rate of the AutoT data trained on so far.
    pub label_noise: f64,
}

impl Default for PairState {
    fn default() -> Self {
        PairState {
            error_multiplier: 1.0,
            hours_seen: 0.0,
            label_noise: 0.0,
        }
    }
}

/// Trainer state across passes: one entry per pair.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainState {
    pub per_pair: BTreeMap<PairId, PairState>,
}

impl TrainState {
    pub fn fresh(registry: &PairRegistry) -> Self {
        TrainState {
            per_pair: registry
                .pairs()
                .iter()
                .map(|p| (p.id.clone(), PairState::default()))
                .collect(),
        }
    }

    pub fn multiplier(&self, pair: &PairId) -> f64 {
        self.per_pair.get(pair).map_or(1.0, |s| s.error_multiplier)
    }
}

fn rng_for(label: &str, seed: u64, utt_id: &str, pair: Option<&PairId>) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update(seed.to_le_bytes());
    h.update([0]);
    h.update(utt_id.as_bytes());
    if let Some(p) = pair {
        h.update([0]);
        h.update(p.as_str().as_bytes());
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn gaussian(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    use rand_distr::{Distribution, Normal};
    Normal::new(0.0, sd).expect("valid sd").sample(rng)
}

/// Decode one utterance through one pair's channel.
///
/// Deterministic given `(seed, utterance id, pair)`; the corruption event
/// draws are shared by all pairs for the same utterance.
pub fn simulate_decode(
    truth: &Utterance,
    pair: &PairId,
    params: &SimParams,
    state: &TrainState,
    registry: &PairRegistry,
    word_pool: &[Token],
) -> DecodeResult {
    let channel = params.channel_for(pair);
    let m = state.multiplier(pair).clamp(0.0, 1.0);
    let del_cut = channel.del_rate * m;
    let sub_cut = (channel.del_rate + channel.sub_rate) * m;
    let ins_cut = channel.ins_rate * m;

    let true_pair = registry.covering_pair(truth).map(|p| &p.id);
    let mismatched = true_pair != Some(pair);
    let len = truth.tokens.len();
    let mut forced = if mismatched && channel.mismatch_penalty > 0.0 {
        (channel.mismatch_penalty * len as f64).ceil() as usize
    } else {
        0
    };

    let mut events = rng_for("events", params.seed, &truth.id, None);
    let mut content = rng_for("content", params.seed, &truth.id, Some(pair));
    let mut noise = rng_for("noise", params.seed, &truth.id, Some(pair));

    let mut hyp: Vec<Token> = Vec::with_capacity(len + 2);
    for t in &truth.tokens {
        let u: f64 = events.gen();
        if u < del_cut {
            // deleted
        } else {
            let base_sub = u < sub_cut;
            let sub_here = if base_sub {
                true
            } else if forced > 0 {
                forced -= 1;
                true
            } else {
                false
            };
            if sub_here {
                hyp.push(other_word(&mut content, word_pool, t));
            } else {
                hyp.push(t.clone());
            }
        }
        let v: f64 = events.gen();
        if v < ins_cut {
            hyp.push(any_word(&mut content, word_pool, t));
        }
    }

    let realized = if len == 0 {
        1.0
    } else {
        edit_cost(&truth.tokens, &hyp) as f64 / len as f64
    };
    let confidence =
        (1.0 - realized + gaussian(&mut noise, channel.confidence_noise_sd)).clamp(0.0, 1.0);
    DecodeResult::from_utt_confidence(&truth.id, pair.clone(), hyp, confidence)
        .expect("simulated confidence is clamped to [0, 1]")
}

fn any_word(rng: &mut ChaCha8Rng, pool: &[Token], fallback: &Token) -> Token {
    if pool.is_empty() {
        return fallback.clone();
    }
    pool[rng.gen_range(0..pool.len())].clone()
}

/// A pool word different from `original` when the pool allows it.
fn other_word(rng: &mut ChaCha8Rng, pool: &[Token], original: &Token) -> Token {
    if pool.is_empty() {
        return original.clone();
    }
    for _ in 0..16 {
        let cand = &pool[rng.gen_range(0..pool.len())];
        if cand.surface != original.surface {
            return cand.clone();
        }
    }
    pool[rng.gen_range(0..pool.len())].clone()
}

/// Surface-level edit distance between two token sequences.
fn edit_cost(reference: &[Token], hypothesis: &[Token]) -> usize {
    let hyp_surfaces: Vec<String> = hypothesis.iter().map(|t| t.surface.clone()).collect();
    align("x", reference, &hyp_surfaces).cost()
}

/// Label error rate of a hypothesis against the hidden truth: edit cost
/// over reference length, capped at 1.
fn label_error_rate(truth: &[Token], hyp: &[Token]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    (edit_cost(truth, hyp) as f64 / truth.len() as f64).min(1.0)
}

/// Apply the training update to every pair's state.
///
/// Clean-equivalent hours: manual and out-of-domain entries count fully;
/// AutoT entries are downweighted by `1 - label_error_rate` against the
/// hidden truth.
pub fn simulate_train(
    trainset: &TrainSet<'_>,
    params: &SimParams,
    prev: &TrainState,
    truth: &Corpus,
) -> Result<(TrainState, TrainSummary), SemisupError> {
    let mut clean_hours = 0.0f64;
    let mut autot_hours = 0.0f64;
    let mut autot_err_hours = 0.0f64;
    for entry in trainset.manifest.entries() {
        let dur_h = trainset.duration_of(&entry.utt_id)? / 3600.0;
        if entry.provenance.is_autot() {
            let hyp = trainset.transcript_of(entry)?;
            let truth_utt = truth.get(&entry.utt_id).ok_or_else(|| {
                SemisupError::Config(format!("`{}` not in truth corpus", entry.utt_id))
            })?;
            let err = label_error_rate(&truth_utt.tokens, hyp);
            clean_hours += dur_h * (1.0 - err);
            autot_hours += dur_h;
            autot_err_hours += dur_h * err;
        } else {
            clean_hours += dur_h;
        }
    }
    let factor = 1.0 - params.gain * clean_hours / (clean_hours + params.half_hours);
    let label_noise = if autot_hours > 0.0 {
        autot_err_hours / autot_hours
    } else {
        0.0
    };
    let mut next = prev.clone();
    for s in next.per_pair.values_mut() {
        s.error_multiplier *= factor;
        s.hours_seen += clean_hours;
        s.label_noise = label_noise;
    }
    let summary = TrainSummary {
        hours: clean_hours,
        detail: serde_json::json!({
            "factor": factor,
            "autot_hours": autot_hours,
            "label_noise": label_noise,
        }),
    };
    Ok((next, summary))
}

/// The simulator as a pipeline backend: decoder plus trainer.
///
/// Holds the truth corpus privately; two independent train states track the
/// transcription models (which drive decoding) and the recognition models
/// (reported only).
pub struct SimBackend {
    params: SimParams,
    truth: Corpus,
    registry: PairRegistry,
    transcriber: TrainState,
    recognizer: TrainState,
    word_pools: BTreeMap<PairId, Vec<Token>>,
}

impl SimBackend {
    pub fn new(
        truth: Corpus,
        registry: PairRegistry,
        params: SimParams,
    ) -> Result<Self, SemisupError> {
        params.validate()?;
        let mut word_pools = BTreeMap::new();
        for spec in registry.pairs() {
            let mut pool: Vec<Token> = Vec::new();
            let mut seen = std::collections::BTreeSet::new();
            for u in truth.utterances() {
                for t in &u.tokens {
                    if (t.lang == spec.langs.0 || t.lang == spec.langs.1)
                        && seen.insert((t.surface.clone(), t.lang.clone()))
                    {
                        pool.push(t.clone());
                    }
                }
            }
            if pool.is_empty() {
                // No in-pair words anywhere: fall back to the whole corpus.
                for u in truth.utterances() {
                    for t in &u.tokens {
                        if seen.insert((t.surface.clone(), t.lang.clone())) {
                            pool.push(t.clone());
                        }
                    }
                }
            }
            pool.sort_by(|a, b| (&a.surface, &a.lang).cmp(&(&b.surface, &b.lang)));
            word_pools.insert(spec.id.clone(), pool);
        }
        let transcriber = TrainState::fresh(&registry);
        let recognizer = TrainState::fresh(&registry);
        Ok(SimBackend {
            params,
            truth,
            registry,
            transcriber,
            recognizer,
            word_pools,
        })
    }

    pub fn registry(&self) -> &PairRegistry {
        &self.registry
    }

    pub fn transcriber_state(&self) -> &TrainState {
        &self.transcriber
    }

    pub fn recognizer_state(&self) -> &TrainState {
        &self.recognizer
    }
}

impl DecoderInterface for SimBackend {
    fn decode(&self, utterance: &Utterance, pair: &PairId) -> Result<DecodeResult, SemisupError> {
        let truth_utt = self.truth.get(&utterance.id).ok_or_else(|| {
            SemisupError::Config(format!("`{}` not in the truth corpus", utterance.id))
        })?;
        let pool = self
            .word_pools
            .get(pair)
            .ok_or_else(|| SemisupError::Config(format!("unregistered pair `{pair}`")))?;
        Ok(simulate_decode(
            truth_utt,
            pair,
            &self.params,
            &self.transcriber,
            &self.registry,
            pool,
        ))
    }
}

impl TrainerInterface for SimBackend {
    fn train(
        &mut self,
        role: ModelRole,
        _pass: u32,
        trainset: &TrainSet<'_>,
    ) -> Result<TrainSummary, SemisupError> {
        let prev = match role {
            ModelRole::Transcriber => &self.transcriber,
            ModelRole::Recognizer => &self.recognizer,
        };
        let (next, summary) = simulate_train(trainset, &self.params, prev, &self.truth)?;
        match role {
            ModelRole::Transcriber => self.transcriber = next,
            ModelRole::Recognizer => self.recognizer = next,
        }
        Ok(summary)
    }

    fn snapshot(&self) -> serde_json::Value {
        serde_json::json!({
            "transcriber": self.transcriber,
            "recognizer": self.recognizer,
        })
    }

    fn restore(&mut self, state: &serde_json::Value) -> Result<(), SemisupError> {
        if state.is_null() {
            return Ok(());
        }
        let transcriber = state
            .get("transcriber")
            .ok_or_else(|| SemisupError::Config("snapshot lacks transcriber state".into()))?;
        let recognizer = state
            .get("recognizer")
            .ok_or_else(|| SemisupError::Config("snapshot lacks recognizer state".into()))?;
        self.transcriber = serde_json::from_value(transcriber.clone())?;
        self.recognizer = serde_json::from_value(recognizer.clone())?;
        Ok(())
    }
}
