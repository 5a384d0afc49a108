//! Language-pair assignment and confidence-threshold selection.

use std::collections::BTreeMap;

use super::{
    DecodeResult, PairId, PairRegistry, PairRow, PassReport, SemisupError, ThresholdPolicy,
};

/// Pick the decode result with the highest utterance confidence. Exact ties
/// are broken by the registry's declared pair order. All results must refer
/// to one utterance and to registered pairs.
pub fn assign_pair<'a>(
    results: &'a [DecodeResult],
    registry: &PairRegistry,
) -> Result<&'a DecodeResult, SemisupError> {
    let first = results.first().ok_or(SemisupError::NoResults)?;
    let mut best: Option<(&DecodeResult, usize)> = None;
    for r in results {
        if r.utt_id != first.utt_id {
            return Err(SemisupError::Config(format!(
                "assignment mixes utterances `{}` and `{}`",
                first.utt_id, r.utt_id
            )));
        }
        let pos = registry
            .position(&r.pair)
            .ok_or_else(|| SemisupError::Config(format!("unregistered pair `{}`", r.pair)))?;
        let better = match best {
            None => true,
            Some((b, bpos)) => {
                r.utt_confidence() > b.utt_confidence()
                    || (r.utt_confidence() == b.utt_confidence() && pos < bpos)
            }
        };
        if better {
            best = Some((r, pos));
        }
    }
    Ok(best.expect("results non-empty").0)
}

/// The per-pair partition of winning decode results. Every decoded
/// utterance appears in exactly one pair's list; lists are sorted by
/// utterance id, and every registered pair has a (possibly empty) list.
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    pub by_pair: BTreeMap<PairId, Vec<DecodeResult>>,
}

/// Assign every utterance of a decode batch. `per_utterance` holds one
/// non-empty group of decode results per utterance.
pub fn assign_all(
    per_utterance: &[Vec<DecodeResult>],
    registry: &PairRegistry,
) -> Result<Assignment, SemisupError> {
    let mut by_pair: BTreeMap<PairId, Vec<DecodeResult>> = registry
        .pairs()
        .iter()
        .map(|p| (p.id.clone(), Vec::new()))
        .collect();
    for group in per_utterance {
        let winner = assign_pair(group, registry)?.clone();
        by_pair
            .get_mut(&winner.pair)
            .expect("registered pair")
            .push(winner);
    }
    for list in by_pair.values_mut() {
        list.sort_by(|a, b| a.utt_id.cmp(&b.utt_id));
    }
    Ok(Assignment { by_pair })
}

/// Per-pair thresholds: the mean assigned confidence. Pairs with no
/// assigned utterances have no threshold (and nothing to filter).
pub fn compute_thresholds(assignment: &Assignment) -> BTreeMap<PairId, f64> {
    assignment
        .by_pair
        .iter()
        .filter(|(_, list)| !list.is_empty())
        .map(|(pair, list)| {
            let mean =
                list.iter().map(DecodeResult::utt_confidence).sum::<f64>() / list.len() as f64;
            (pair.clone(), mean)
        })
        .collect()
}

/// Apply threshold filtering: when active, keep utterances whose confidence
/// is at or above their pair's threshold (the boundary is retained); when
/// inactive, keep everything.
pub fn filter_assignment<'a>(
    assignment: &'a Assignment,
    thresholds: &BTreeMap<PairId, f64>,
    active: bool,
) -> BTreeMap<PairId, Vec<&'a DecodeResult>> {
    assignment
        .by_pair
        .iter()
        .map(|(pair, list)| {
            let kept: Vec<&DecodeResult> = match (active, thresholds.get(pair)) {
                (false, _) => list.iter().collect(),
                (true, Some(t)) => list.iter().filter(|r| r.utt_confidence() >= *t).collect(),
                (true, None) => Vec::new(),
            };
            (pair.clone(), kept)
        })
        .collect()
}

/// Assemble the pass report from an assignment and its filtered selection.
/// Pair rows follow the registry's declared order.
pub fn pass_report(
    pass: u32,
    policy: ThresholdPolicy,
    registry: &PairRegistry,
    assignment: &Assignment,
    thresholds: &BTreeMap<PairId, f64>,
    retained: &BTreeMap<PairId, Vec<&DecodeResult>>,
    duration_of: impl Fn(&str) -> f64,
) -> PassReport {
    let active = policy.filter_active(pass);
    let mut rows = Vec::with_capacity(registry.pairs().len());
    let (mut total_assigned, mut total_retained, mut total_dur) = (0usize, 0usize, 0.0f64);
    for spec in registry.pairs() {
        let pair = &spec.id;
        let assigned = assignment.by_pair.get(pair).map_or(0, Vec::len);
        let kept = retained.get(pair).map_or(&[][..], Vec::as_slice);
        let dur: f64 = kept.iter().map(|r| duration_of(&r.utt_id)).sum();
        total_assigned += assigned;
        total_retained += kept.len();
        total_dur += dur;
        rows.push(PairRow {
            pair: pair.clone(),
            assigned,
            retained: kept.len(),
            threshold: thresholds.get(pair).copied(),
            retained_duration_s: dur,
        });
    }
    PassReport {
        pass,
        policy,
        filter_active: active,
        pairs: rows,
        total_assigned,
        total_retained,
        total_retained_duration_s: total_dur,
        transcriber_trainset: 0,
        recognizer_trainset: 0,
        train_summaries: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dr(utt: &str, pair: &str, conf: f64) -> DecodeResult {
        DecodeResult::from_utt_confidence(
            utt,
            PairId::new(pair).unwrap(),
            vec![
                crate::corpus::Token::new("w", crate::corpus::LangTag::new("en").unwrap()).unwrap(),
            ],
            conf,
        )
        .unwrap()
    }

    fn registry() -> PairRegistry {
        PairRegistry::default()
    }

    #[test]
    fn argmax_assignment() {
        let results = vec![
            dr("u1", "EZ", 0.9),
            dr("u1", "EX", 0.4),
            dr("u1", "ES", 0.2),
            dr("u1", "ET", 0.1),
        ];
        let w = assign_pair(&results, &registry()).unwrap();
        assert_eq!(w.pair.as_str(), "EZ");
    }

    #[test]
    fn single_decoder_wins_by_default() {
        let results = vec![dr("u1", "ES", 0.3)];
        assert_eq!(
            assign_pair(&results, &registry()).unwrap().pair.as_str(),
            "ES"
        );
    }

    #[test]
    fn exact_tie_broken_by_registry_order() {
        let results = vec![dr("u1", "ES", 0.5), dr("u1", "EZ", 0.5)];
        assert_eq!(
            assign_pair(&results, &registry()).unwrap().pair.as_str(),
            "EZ"
        );
    }

    #[test]
    fn no_results_is_an_error() {
        assert!(matches!(
            assign_pair(&[], &registry()),
            Err(SemisupError::NoResults)
        ));
    }

    #[test]
    fn threshold_is_the_mean_and_boundary_is_retained() {
        let groups = vec![
            vec![dr("u1", "EZ", 0.2)],
            vec![dr("u2", "EZ", 0.4)],
            vec![dr("u3", "EZ", 0.6)],
            vec![dr("u4", "EZ", 0.8)],
        ];
        let a = assign_all(&groups, &registry()).unwrap();
        let t = compute_thresholds(&a);
        let ez = PairId::new("EZ").unwrap();
        assert!((t[&ez] - 0.5).abs() < 1e-12);
        let kept = filter_assignment(&a, &t, true);
        let ids: Vec<&str> = kept[&ez].iter().map(|r| r.utt_id.as_str()).collect();
        assert_eq!(ids, vec!["u3", "u4"]);

        // Single utterance: threshold equals its confidence and it stays.
        let groups = vec![vec![dr("u9", "EX", 0.7)]];
        let a = assign_all(&groups, &registry()).unwrap();
        let t = compute_thresholds(&a);
        let kept = filter_assignment(&a, &t, true);
        assert_eq!(kept[&PairId::new("EX").unwrap()].len(), 1);
    }

    #[test]
    fn inactive_filter_retains_everything() {
        let groups = vec![vec![dr("u1", "EZ", 0.01)], vec![dr("u2", "EZ", 0.99)]];
        let a = assign_all(&groups, &registry()).unwrap();
        let t = compute_thresholds(&a);
        let kept = filter_assignment(&a, &t, false);
        assert_eq!(kept[&PairId::new("EZ").unwrap()].len(), 2);
    }

    #[test]
    fn independent_thresholds_per_pair() {
        // Six utterances across two pairs with distinct distributions.
        let groups = vec![
            vec![dr("u1", "EZ", 0.1)],
            vec![dr("u2", "EZ", 0.3)],
            vec![dr("u3", "EZ", 0.5)],
            vec![dr("u4", "ES", 0.6)],
            vec![dr("u5", "ES", 0.8)],
            vec![dr("u6", "ES", 1.0)],
        ];
        let a = assign_all(&groups, &registry()).unwrap();
        let t = compute_thresholds(&a);
        let ez = PairId::new("EZ").unwrap();
        let es = PairId::new("ES").unwrap();
        assert!((t[&ez] - 0.3).abs() < 1e-12);
        assert!((t[&es] - 0.8).abs() < 1e-12);
        let kept = filter_assignment(&a, &t, true);
        assert_eq!(kept[&ez].len(), 2); // 0.3 and 0.5
        assert_eq!(kept[&es].len(), 2); // 0.8 and 1.0
        assert!(!t.contains_key(&PairId::new("EX").unwrap()));
    }

    #[test]
    fn assignment_partitions_the_input() {
        let groups = vec![
            vec![dr("u1", "EZ", 0.5), dr("u1", "EX", 0.4)],
            vec![dr("u2", "EZ", 0.2), dr("u2", "EX", 0.7)],
            vec![dr("u3", "ES", 0.2), dr("u3", "ET", 0.2)],
        ];
        let a = assign_all(&groups, &registry()).unwrap();
        let total: usize = a.by_pair.values().map(Vec::len).sum();
        assert_eq!(total, 3);
        let mut ids: Vec<&str> = a
            .by_pair
            .values()
            .flatten()
            .map(|r| r.utt_id.as_str())
            .collect();
        ids.sort_unstable();
        assert_eq!(ids, vec!["u1", "u2", "u3"]);
    }
}
