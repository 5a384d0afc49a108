//! Bootstrap significance estimation for paired WER comparisons.
//!
//! Utterances are resampled with replacement, identically for both systems
//! in each resample, and the pooled WERs recomputed. Each resample draws
//! from its own counter-derived RNG stream, so results are bit-identical
//! for a given seed regardless of how many threads run the resamples.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{AlignedPair, ScoringError};

/// Result of a paired bootstrap comparison of two systems.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BootstrapResult {
    pub n_resamples: usize,
    /// Pooled WER of each system on the full set, in percent.
    pub wer_a: f64,
    pub wer_b: f64,
    /// 95% percentile confidence intervals of the resampled WERs.
    pub ci_a: (f64, f64),
    pub ci_b: (f64, f64),
    /// 95% interval of the per-resample difference `wer_a - wer_b`.
    pub delta_ci: (f64, f64),
    /// Fraction of resamples where system A's WER is strictly below B's.
    pub p_improvement: f64,
}

/// Per-utterance error and reference counts, sorted by utterance id.
fn per_utterance_counts(
    pairs_a: &[AlignedPair],
    pairs_b: &[AlignedPair],
) -> Result<Vec<(u64, u64, u64, u64)>, ScoringError> {
    let mut a: Vec<&AlignedPair> = pairs_a.iter().collect();
    let mut b: Vec<&AlignedPair> = pairs_b.iter().collect();
    a.sort_by(|x, y| x.id.cmp(&y.id));
    b.sort_by(|x, y| x.id.cmp(&y.id));
    if a.len() != b.len() {
        return Err(ScoringError::IdMismatch(format!(
            "system A has {} utterances, system B has {}",
            a.len(),
            b.len()
        )));
    }
    a.iter()
        .zip(&b)
        .map(|(pa, pb)| {
            if pa.id != pb.id {
                return Err(ScoringError::IdMismatch(format!(
                    "`{}` vs `{}`",
                    pa.id, pb.id
                )));
            }
            let (sa, da, ia, na) = pa.counts();
            let (sb, db, ib, nb) = pb.counts();
            debug_assert_eq!(na, nb, "same reference on both sides");
            Ok((sa + da + ia, na, sb + db + ib, nb))
        })
        .collect()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}

fn pooled_wer(err: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * err as f64 / n as f64
    }
}

/// Paired bootstrap of two systems over the same utterance set.
pub fn bootstrap(
    pairs_a: &[AlignedPair],
    pairs_b: &[AlignedPair],
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapResult, ScoringError> {
    if n_resamples < 1000 {
        return Err(ScoringError::InvalidInput(format!(
            "need at least 1000 resamples, got {n_resamples}"
        )));
    }
    let counts = per_utterance_counts(pairs_a, pairs_b)?;
    if counts.is_empty() {
        return Err(ScoringError::EmptyReference);
    }
    let n_utts = counts.len();

    let stats: Vec<(f64, f64)> = (0..n_resamples)
        .into_par_iter()
        .map(|resample| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(resample as u64);
            let (mut ea, mut na, mut eb, mut nb) = (0u64, 0u64, 0u64, 0u64);
            for _ in 0..n_utts {
                let idx = rng.gen_range(0..n_utts);
                let (a_err, a_n, b_err, b_n) = counts[idx];
                ea += a_err;
                na += a_n;
                eb += b_err;
                nb += b_n;
            }
            (pooled_wer(ea, na), pooled_wer(eb, nb))
        })
        .collect();

    let improvements = stats.iter().filter(|(a, b)| a < b).count();
    let mut wa: Vec<f64> = stats.iter().map(|(a, _)| *a).collect();
    let mut wb: Vec<f64> = stats.iter().map(|(_, b)| *b).collect();
    let mut delta: Vec<f64> = stats.iter().map(|(a, b)| a - b).collect();
    wa.sort_by(f64::total_cmp);
    wb.sort_by(f64::total_cmp);
    delta.sort_by(f64::total_cmp);

    let (full_ea, full_na) = counts
        .iter()
        .fold((0u64, 0u64), |(e, n), c| (e + c.0, n + c.1));
    let (full_eb, full_nb) = counts
        .iter()
        .fold((0u64, 0u64), |(e, n), c| (e + c.2, n + c.3));

    Ok(BootstrapResult {
        n_resamples,
        wer_a: pooled_wer(full_ea, full_na),
        wer_b: pooled_wer(full_eb, full_nb),
        ci_a: (percentile(&wa, 0.025), percentile(&wa, 0.975)),
        ci_b: (percentile(&wb, 0.025), percentile(&wb, 0.975)),
        delta_ci: (percentile(&delta, 0.025), percentile(&delta, 0.975)),
        p_improvement: improvements as f64 / n_resamples as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LangTag, Token};
    use crate::scoring::align;

    fn toks(words: &[&str]) -> Vec<Token> {
        words
            .iter()
            .map(|w| Token::new(w, LangTag::new("en").unwrap()).unwrap())
            .collect()
    }

    fn fixture(
        n: usize,
        errs_a: impl Fn(usize) -> usize,
        errs_b: impl Fn(usize) -> usize,
    ) -> (Vec<AlignedPair>, Vec<AlignedPair>) {
        // Each utterance has 4 reference words; the first `errs_*(i)` words
        // are substituted in the respective system's hypothesis.
        let mut pa = Vec::new();
        let mut pb = Vec::new();
        for i in 0..n {
            let r = toks(&["w1", "w2", "w3", "w4"]);
            let mk = |errs: usize| -> Vec<String> {
                (1..=4)
                    .map(|k| {
                        if k <= errs {
                            format!("x{k}")
                        } else {
                            format!("w{k}")
                        }
                    })
                    .collect()
            };
            pa.push(align(&format!("u{i:04}"), &r, &mk(errs_a(i))));
            pb.push(align(&format!("u{i:04}"), &r, &mk(errs_b(i))));
        }
        (pa, pb)
    }

    #[test]
    fn identical_systems_have_no_improvement() {
        let (pa, pb) = fixture(50, |i| i % 3, |i| i % 3);
        let r = bootstrap(&pa, &pb, 1000, 7).unwrap();
        assert_eq!(r.p_improvement, 0.0);
        assert_eq!(r.delta_ci, (0.0, 0.0));
        assert_eq!(r.wer_a, r.wer_b);
    }

    #[test]
    fn strict_dominance_gives_full_improvement() {
        let (pa, pb) = fixture(50, |i| i % 3, |i| i % 3 + 1);
        let r = bootstrap(&pa, &pb, 1000, 7).unwrap();
        assert_eq!(r.p_improvement, 1.0);
        assert!(r.delta_ci.0 < 0.0 && r.delta_ci.1 < 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let (pa, pb) = fixture(30, |i| i % 3, |i| i % 3 + 1);
        let r1 = bootstrap(&pa, &pb, 1000, 42).unwrap();
        let r2 = bootstrap(&pa, &pb, 1000, 42).unwrap();
        assert_eq!(r1.ci_a, r2.ci_a);
        assert_eq!(r1.ci_b, r2.ci_b);
        assert_eq!(r1.delta_ci, r2.delta_ci);
        assert_eq!(r1.p_improvement, r2.p_improvement);
        let r3 = bootstrap(&pa, &pb, 1000, 43).unwrap();
        assert!(r3.ci_a != r1.ci_a || r3.p_improvement != r1.p_improvement);
    }

    #[test]
    fn mismatched_ids_rejected() {
        let (pa, _) = fixture(3, |_| 1, |_| 1);
        let (mut pb, _) = fixture(3, |_| 1, |_| 1);
        pb[0].id = "other".into();
        assert!(matches!(
            bootstrap(&pa, &pb, 1000, 1),
            Err(ScoringError::IdMismatch(_))
        ));
    }

    #[test]
    fn too_few_resamples_rejected() {
        let (pa, pb) = fixture(3, |_| 1, |_| 1);
        assert!(matches!(
            bootstrap(&pa, &pb, 999, 1),
            Err(ScoringError::InvalidInput(_))
        ));
    }
}
