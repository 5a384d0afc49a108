//! Properties of assignment and threshold selection.

use proptest::prelude::*;

use cswitch_core::corpus::{LangTag, Token};
use cswitch_core::semisup::{
    assign_all, compute_thresholds, filter_assignment, DecodeResult, PairId, PairRegistry,
};

fn dr(utt: &str, pair: &str, conf: f64) -> DecodeResult {
    DecodeResult::from_utt_confidence(
        utt,
        PairId::new(pair).unwrap(),
        vec![Token::new("w", LangTag::new("en").unwrap()).unwrap()],
        conf,
    )
    .unwrap()
}

const PAIRS: [&str; 4] = ["EZ", "EX", "ES", "ET"];

fn build_groups(confs: &[[f64; 4]]) -> Vec<Vec<DecodeResult>> {
    confs
        .iter()
        .enumerate()
        .map(|(i, row)| {
            PAIRS
                .iter()
                .zip(row)
                .map(|(p, c)| dr(&format!("u{i:03}"), p, *c))
                .collect()
        })
        .collect()
}

/// Status of one utterance after selection.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Outcome {
    pair: usize,
    retained: bool,
}

fn select(confs: &[[f64; 4]]) -> Vec<Outcome> {
    let registry = PairRegistry::default();
    let groups = build_groups(confs);
    let assignment = assign_all(&groups, &registry).unwrap();
    let thresholds = compute_thresholds(&assignment);
    let retained = filter_assignment(&assignment, &thresholds, true);
    (0..confs.len())
        .map(|i| {
            let id = format!("u{i:03}");
            let pair_idx = assignment
                .by_pair
                .iter()
                .position(|(_, list)| list.iter().any(|r| r.utt_id == id))
                .expect("assignment partitions the set");
            let pair_id = assignment.by_pair.keys().nth(pair_idx).unwrap().clone();
            let kept = retained[&pair_id].iter().any(|r| r.utt_id == id);
            let declared = registry.position(&pair_id).unwrap();
            Outcome {
                pair: declared,
                retained: kept,
            }
        })
        .collect()
}

proptest! {
    /// Raising one decode confidence can only (a) keep the utterance where
    /// it was with retention never flipping from kept to dropped, or (b)
    /// move it to the perturbed pair when it now wins the argmax.
    #[test]
    fn raising_confidence_is_monotone(
        rows in proptest::collection::vec([0.0f64..=1.0, 0.0..=1.0, 0.0..=1.0, 0.0..=1.0], 2..12),
        which in 0usize..12,
        pair_idx in 0usize..4,
        bump in 0.01f64..=1.0,
    ) {
        let confs: Vec<[f64; 4]> = rows.clone();
        let which = which % confs.len();
        let before = select(&confs);

        let mut bumped = confs.clone();
        bumped[which][pair_idx] = (bumped[which][pair_idx] + bump).min(1.0);
        let after = select(&bumped);

        let b = before[which];
        let a = after[which];
        if a.pair == b.pair {
            // Same pair: if the bump touched the winning result, retention
            // can only improve for this utterance.
            if pair_idx == b.pair {
                prop_assert!(
                    !b.retained || a.retained,
                    "utterance fell out of the retained set: {b:?} -> {a:?}"
                );
            }
        } else {
            // Pair changed: only toward the perturbed pair, and only
            // because it now wins the argmax.
            prop_assert_eq!(a.pair, pair_idx);
            let row = &bumped[which];
            let winner_conf = row[a.pair];
            for (j, c) in row.iter().enumerate() {
                if j != a.pair {
                    prop_assert!(
                        winner_conf > *c || (winner_conf == *c && a.pair < j),
                        "perturbed pair did not win the argmax"
                    );
                }
            }
        }
    }

    /// Assignment always partitions the utterance set; with filtering off
    /// everything is retained.
    #[test]
    fn partition_and_nt_retention(
        rows in proptest::collection::vec([0.0f64..=1.0, 0.0..=1.0, 0.0..=1.0, 0.0..=1.0], 1..12),
    ) {
        let registry = PairRegistry::default();
        let groups = build_groups(&rows);
        let assignment = assign_all(&groups, &registry).unwrap();
        let total: usize = assignment.by_pair.values().map(Vec::len).sum();
        prop_assert_eq!(total, rows.len());

        let thresholds = compute_thresholds(&assignment);
        let retained = filter_assignment(&assignment, &thresholds, false);
        let kept: usize = retained.values().map(Vec::len).sum();
        prop_assert_eq!(kept, rows.len());

        // With filtering on, retention never exceeds assignment per pair.
        let filtered = filter_assignment(&assignment, &thresholds, true);
        for (pair, list) in &assignment.by_pair {
            prop_assert!(filtered[pair].len() <= list.len());
        }
    }
}
