use serde::Serialize;

use super::{differing_jamo, tokenize, HangulError, Syllable};

/// One edit operation. Indices refer to syllable tokens, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AlignOp {
    Match { ref_idx: usize, hyp_idx: usize },
    Substitute { ref_idx: usize, hyp_idx: usize, cost: f64 },
    Delete { ref_idx: usize },
    Insert { hyp_idx: usize },
}

impl AlignOp {
    pub fn cost(&self) -> f64 {
        match *self {
            AlignOp::Match { .. } => 0.0,
            AlignOp::Substitute { cost, .. } => cost,
            AlignOp::Delete { .. } | AlignOp::Insert { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentScript {
    pub ops: Vec<AlignOp>,
    pub total_cost: f64,
}

// Costs are tracked in thirds so that the table holds exact integers and
// ties compare exactly.
const INDEL: u32 = 3;

/// Minimum-cost edit script between the syllables of two sentences.
pub fn align(reference: &str, hypothesis: &str) -> Result<AlignmentScript, HangulError> {
    let r = tokenize(reference)?;
    let h = tokenize(hypothesis)?;
    let r: Vec<Syllable> = r.syllables().copied().collect();
    let h: Vec<Syllable> = h.syllables().copied().collect();
    Ok(align_tokens(&r, &h))
}

/// Dynamic-programming alignment over syllable tokens.
///
/// Match costs 0, substitution costs [`jamo_distance`](super::jamo_distance),
/// insertion and deletion cost 1. The backtrace runs from the end of both
/// sequences and, where several moves reach the optimum, prefers
/// Match, then Substitute, then Delete, then Insert.
pub fn align_tokens(reference: &[Syllable], hypothesis: &[Syllable]) -> AlignmentScript {
    let (n, m) = (reference.len(), hypothesis.len());
    let width = m + 1;
    let mut table = vec![0u32; (n + 1) * width];
    for (j, cell) in table[..width].iter_mut().enumerate() {
        *cell = j as u32 * INDEL;
    }
    for i in 1..=n {
        table[i * width] = i as u32 * INDEL;
        for j in 1..=m {
            let diag = table[(i - 1) * width + j - 1] + differing_jamo(&reference[i - 1], &hypothesis[j - 1]);
            let up = table[(i - 1) * width + j] + INDEL;
            let left = table[i * width + j - 1] + INDEL;
            table[i * width + j] = diag.min(up).min(left);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = table[i * width + j];
        if i > 0 && j > 0 {
            let diff = differing_jamo(&reference[i - 1], &hypothesis[j - 1]);
            if table[(i - 1) * width + j - 1] + diff == here {
                let (ref_idx, hyp_idx) = (i - 1, j - 1);
                ops.push(if diff == 0 {
                    AlignOp::Match { ref_idx, hyp_idx }
                } else {
                    AlignOp::Substitute {
                        ref_idx,
                        hyp_idx,
                        cost: diff as f64 / 3.0,
                    }
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && table[(i - 1) * width + j] + INDEL == here {
            ops.push(AlignOp::Delete { ref_idx: i - 1 });
            i -= 1;
        } else {
            ops.push(AlignOp::Insert { hyp_idx: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();

    AlignmentScript {
        ops,
        total_cost: table[n * width + m] as f64 / 3.0,
    }
}
