//! Minimal-cost Levenshtein alignment of token sequences.

use serde::Serialize;

use crate::corpus::Token;

/// One alignment operation. The reference side keeps its language tag; the
/// hypothesis side is a bare surface form whose language, when needed, is
/// looked up in the closed vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AlignOp {
    Match { r: Token, h: String },
    Sub { r: Token, h: String },
    Del { r: Token },
    Ins { h: String },
}

impl AlignOp {
    pub fn ref_token(&self) -> Option<&Token> {
        match self {
            AlignOp::Match { r, .. } | AlignOp::Sub { r, .. } | AlignOp::Del { r } => Some(r),
            AlignOp::Ins { .. } => None,
        }
    }

    pub fn hyp_surface(&self) -> Option<&str> {
        match self {
            AlignOp::Match { h, .. } | AlignOp::Sub { h, .. } | AlignOp::Ins { h } => Some(h),
            AlignOp::Del { .. } => None,
        }
    }

    pub fn is_match(&self) -> bool {
        matches!(self, AlignOp::Match { .. })
    }
}

/// The Levenshtein alignment of one reference/hypothesis pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignedPair {
    pub id: String,
    pub ops: Vec<AlignOp>,
}

impl AlignedPair {
    /// Total edit cost: substitutions + deletions + insertions.
    pub fn cost(&self) -> usize {
        self.ops.iter().filter(|op| !op.is_match()).count()
    }

    /// (substitutions, deletions, insertions, reference length).
    pub fn counts(&self) -> (u64, u64, u64, u64) {
        let (mut s, mut d, mut i, mut n) = (0, 0, 0, 0);
        for op in &self.ops {
            match op {
                AlignOp::Match { .. } => n += 1,
                AlignOp::Sub { .. } => {
                    s += 1;
                    n += 1;
                }
                AlignOp::Del { .. } => {
                    d += 1;
                    n += 1;
                }
                AlignOp::Ins { .. } => i += 1,
            }
        }
        (s, d, i, n)
    }

    /// Reference tokens reconstructed from the ref side of the ops.
    pub fn reference(&self) -> Vec<&Token> {
        self.ops.iter().filter_map(AlignOp::ref_token).collect()
    }

    /// Hypothesis surfaces reconstructed from the hyp side of the ops.
    pub fn hypothesis(&self) -> Vec<&str> {
        self.ops.iter().filter_map(AlignOp::hyp_surface).collect()
    }
}

/// Align a reference against a hypothesis with unit costs. Ties are broken
/// deterministically, preferring match over substitution over deletion over
/// insertion while tracing back.
pub fn align(id: &str, reference: &[Token], hypothesis: &[String]) -> AlignedPair {
    let n = reference.len();
    let m = hypothesis.len();
    let mut dp = vec![vec![0u32; m + 1]; n + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i as u32;
    }
    for (j, cell) in dp[0].iter_mut().enumerate() {
        *cell = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let eq = reference[i - 1].surface == hypothesis[j - 1];
            let diag = dp[i - 1][j - 1] + u32::from(!eq);
            let del = dp[i - 1][j] + 1;
            let ins = dp[i][j - 1] + 1;
            dp[i][j] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let cost = dp[i][j];
        let eq = i > 0 && j > 0 && reference[i - 1].surface == hypothesis[j - 1];
        if eq && dp[i - 1][j - 1] == cost {
            ops.push(AlignOp::Match {
                r: reference[i - 1].clone(),
                h: hypothesis[j - 1].clone(),
            });
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && !eq && dp[i - 1][j - 1] + 1 == cost {
            ops.push(AlignOp::Sub {
                r: reference[i - 1].clone(),
                h: hypothesis[j - 1].clone(),
            });
            i -= 1;
            j -= 1;
        } else if i > 0 && dp[i - 1][j] + 1 == cost {
            ops.push(AlignOp::Del {
                r: reference[i - 1].clone(),
            });
            i -= 1;
        } else {
            ops.push(AlignOp::Ins {
                h: hypothesis[j - 1].clone(),
            });
            j -= 1;
        }
    }
    ops.reverse();
    AlignedPair {
        id: id.to_string(),
        ops,
    }
}
