//! Pieces shared by the two floating tail engines: support of the pmf,
//! anchor selection, and magnitude-ordered accumulation.

use rug::Float;

use crate::error::{BoundError, Result};

/// Range of `j` over which `p(n, m, s, j)` is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Support {
    pub lo: u64,
    pub hi: u64,
}

impl Support {
    pub fn new(n: u64, m: u64, s: u64) -> Self {
        Support {
            lo: s.saturating_sub(n - m),
            hi: s.min(m),
        }
    }

    pub fn contains(&self, j: u64) -> bool {
        self.lo <= j && j <= self.hi
    }
}

pub(crate) fn check_domain(n: u64, m: u64, s: u64, k: u64) -> Result<()> {
    if n < 1 || m > n || s < 1 || s > n || k > s {
        return Err(BoundError::domain(format!(
            "need 0 <= m <= n, 1 <= s <= n, 0 <= k <= s; got n = {n}, m = {m}, s = {s}, k = {k}"
        )));
    }
    Ok(())
}

/// Mode of the hypergeometric pmf, `floor((s + 1)(m + 1) / (n + 2))`.
pub(crate) fn mode(n: u64, m: u64, s: u64) -> u64 {
    ((s as u128 + 1) * (m as u128 + 1) / (n as u128 + 2)) as u64
}

/// Where a left-tail walk starts: `min(k, mode)`, clamped into the support.
pub(crate) fn anchor_index(n: u64, m: u64, s: u64, k: u64, support: Support) -> u64 {
    mode(n, m, s).min(k).clamp(support.lo, support.hi)
}

/// How a left tail was assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSequence {
    /// Index of the term evaluated from scratch.
    pub anchor_j: u64,
    pub anchor_value: Float,
    /// Smallest index reached by the downward walk.
    pub lowest_j: u64,
    /// Largest index reached by the upward walk.
    pub highest_j: u64,
}

impl TermSequence {
    pub fn terms_summed(&self) -> u64 {
        self.highest_j - self.lowest_j + 1
    }
}

/// A tail value together with the term range behind it. `terms` is `None`
/// when the tail was settled structurally (0 or 1) without summing.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSum {
    pub value: Float,
    pub terms: Option<TermSequence>,
}

impl TailSum {
    pub(crate) fn constant(prec: u32, value: u32) -> Self {
        TailSum {
            value: Float::with_val(prec, value),
            terms: None,
        }
    }
}

/// Left tails that need no summation: zero past the support, one when the
/// whole support is included.
pub(crate) fn structural_left_tail(k: u64, support: Support) -> Option<u32> {
    if k < support.lo {
        Some(0)
    } else if k >= support.hi {
        Some(1)
    } else {
        None
    }
}

/// Adds walk terms smallest first. Each walk moves away from the mode, so its
/// terms are non-increasing and reversing them sorts by magnitude.
pub(crate) fn accumulate(prec: u32, anchor: &Float, down: &[Float], up: &[Float]) -> Float {
    let mut lower = Float::with_val(prec, 0);
    for t in down.iter().rev() {
        lower += t;
    }
    let mut upper = Float::with_val(prec, 0);
    for t in up.iter().rev() {
        upper += t;
    }
    let (small, large) = if lower < upper {
        (lower, upper)
    } else {
        (upper, lower)
    };
    let mut total = small;
    total += large;
    total += anchor;
    total
}
