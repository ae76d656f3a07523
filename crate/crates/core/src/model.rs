//! Query types and the exact-rational hypergeometric oracle.
//!
//! Everything here is computed without rounding. The oracle is slow by
//! construction and guarded by a population-size limit; it is the ground
//! truth the floating engines are tested against.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{BoundError, Result};

/// Exact probability: an arbitrary-precision ratio kept in lowest terms.
pub type ExactRational = BigRational;

/// One bound query: population `n`, sample size `s`, observed successes `k`
/// and bound-failure probability `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryInstance {
    n: u64,
    s: u64,
    k: u64,
    delta: f64,
}

impl QueryInstance {
    pub fn new(n: u64, s: u64, k: u64, delta: f64) -> Result<Self> {
        if n < 1 {
            return Err(BoundError::domain("population n must be at least 1"));
        }
        if s < 1 || s > n {
            return Err(BoundError::domain(format!(
                "sample size must satisfy 1 <= s <= n, got s = {s}, n = {n}"
            )));
        }
        if k > s {
            return Err(BoundError::domain(format!(
                "successes must satisfy k <= s, got k = {k}, s = {s}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(BoundError::domain(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(QueryInstance { n, s, k, delta })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s(&self) -> u64 {
        self.s
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The same query with failures and successes swapped (`k -> s - k`).
    pub fn complement(&self) -> Self {
        QueryInstance {
            k: self.s - self.k,
            ..*self
        }
    }

    /// The same query at a different failure probability.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.n, self.s, self.k, delta)
    }
}

impl fmt::Display for QueryInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(n={}, s={}, k={}, delta={})",
            self.n, self.s, self.k, self.delta
        )
    }
}

/// `delta` as an exact rational (the exact binary value of the double).
pub fn exact_delta(delta: f64) -> ExactRational {
    BigRational::from_float(delta).expect("delta is finite")
}

/// Correctly rounded conversion of an exact rational to a float of `prec` bits.
pub fn rational_to_float(r: &ExactRational, prec: u32) -> Float {
    let num = Integer::from_str_radix(&r.numer().to_str_radix(16), 16).expect("hex digits");
    let den = Integer::from_str_radix(&r.denom().to_str_radix(16), 16).expect("hex digits");
    Float::with_val(prec, Rational::from((num, den)))
}

/// Binomial coefficient with the conventions `C(i, j) = 0` for `j < 0`,
/// `j > i` or `i < 0`, and `C(0, 0) = 1`.
pub fn binom(i: i64, j: i64) -> BigInt {
    if i < 0 || j < 0 || j > i {
        return BigInt::zero();
    }
    let j = j.min(i - j);
    let mut acc = BigInt::one();
    for t in 0..j {
        acc *= i - t;
        acc /= t + 1;
    }
    acc
}

fn binom_u(i: u64, j: u64) -> BigInt {
    if j > i {
        return BigInt::zero();
    }
    let j = j.min(i - j);
    let mut acc = BigInt::one();
    for t in 0..j {
        acc *= i - t;
        acc /= t + 1;
    }
    acc
}

/// Settings for the exact oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOracle {
    /// Largest population the oracle will accept.
    pub max_n: u64,
    /// Find bounds by scanning every `m` instead of bisecting.
    pub exhaustive_scan: bool,
}

impl Default for ExactOracle {
    fn default() -> Self {
        ExactOracle {
            max_n: Self::DEFAULT_MAX_N,
            exhaustive_scan: false,
        }
    }
}

impl ExactOracle {
    pub const DEFAULT_MAX_N: u64 = 10_000;

    fn guard(&self, n: u64, m: u64, s: u64) -> Result<()> {
        if n > self.max_n {
            return Err(BoundError::OracleTooLarge {
                n,
                limit: self.max_n,
            });
        }
        if m > n {
            return Err(BoundError::domain(format!(
                "successes in population must satisfy m <= n, got m = {m}, n = {n}"
            )));
        }
        if s < 1 || s > n {
            return Err(BoundError::domain(format!(
                "sample size must satisfy 1 <= s <= n, got s = {s}, n = {n}"
            )));
        }
        Ok(())
    }

    /// `C(m, j) C(n - m, s - j) / C(n, s)`.
    pub fn pmf(&self, n: u64, m: u64, s: u64, j: u64) -> Result<ExactRational> {
        self.guard(n, m, s)?;
        if j > s {
            return Ok(BigRational::zero());
        }
        let numer = binom_u(m, j) * binom_u(n - m, s - j);
        Ok(BigRational::new(numer, binom_u(n, s)))
    }

    /// `sum_{i=0..=k} pmf(n, m, s, i)`.
    pub fn left_tail(&self, n: u64, m: u64, s: u64, k: u64) -> Result<ExactRational> {
        self.guard(n, m, s)?;
        if k > s {
            return Err(BoundError::domain(format!("k = {k} exceeds s = {s}")));
        }
        Ok(BigRational::new(term_sum(n, m, s, 0, k), binom_u(n, s)))
    }

    /// `sum_{i=k..=min(s, m)} pmf(n, m, s, i)`; an empty sum is zero.
    pub fn right_tail(&self, n: u64, m: u64, s: u64, k: u64) -> Result<ExactRational> {
        self.guard(n, m, s)?;
        if k > s {
            return Err(BoundError::domain(format!("k = {k} exceeds s = {s}")));
        }
        let top = s.min(m);
        if k > top {
            return Ok(BigRational::zero());
        }
        Ok(BigRational::new(term_sum(n, m, s, k, top), binom_u(n, s)))
    }

    /// `max { m : L(n, m, s, k) >= delta }`.
    pub fn upper_bound(&self, q: &QueryInstance) -> Result<u64> {
        let (n, s, k) = (q.n, q.s, q.k);
        self.guard(n, 0, s)?;
        if k == s {
            return Ok(n);
        }
        let delta = exact_delta(q.delta);
        let meets = |m: u64| -> Result<bool> { Ok(self.left_tail(n, m, s, k)? >= delta) };
        if self.exhaustive_scan {
            let mut best = 0;
            for m in 0..=n {
                if meets(m)? {
                    best = m;
                }
            }
            return Ok(best);
        }
        // L(n, 0, s, k) = 1 and L(n, n, s, k) = 0 for k < s.
        let (mut low, mut high) = (0u64, n);
        while high - low > 1 {
            let mid = low + (high - low) / 2;
            if meets(mid)? {
                low = mid;
            } else {
                high = mid;
            }
        }
        Ok(low)
    }

    /// `min { m : R(n, m, s, k) >= delta }`.
    pub fn lower_bound(&self, q: &QueryInstance) -> Result<u64> {
        let (n, s, k) = (q.n, q.s, q.k);
        self.guard(n, 0, s)?;
        if k == 0 {
            return Ok(0);
        }
        let delta = exact_delta(q.delta);
        let meets = |m: u64| -> Result<bool> { Ok(self.right_tail(n, m, s, k)? >= delta) };
        if self.exhaustive_scan {
            for m in 0..=n {
                if meets(m)? {
                    return Ok(m);
                }
            }
            unreachable!("R(n, n, s, k) = 1");
        }
        // R(n, 0, s, k) = 0 for k >= 1 and R(n, n, s, k) = 1.
        let (mut low, mut high) = (0u64, n);
        while high - low > 1 {
            let mid = low + (high - low) / 2;
            if meets(mid)? {
                high = mid;
            } else {
                low = mid;
            }
        }
        Ok(high)
    }
}

/// `sum_{i=from..=to} C(m, i) C(n - m, s - i)`, walking both binomials by
/// exact recurrences.
fn term_sum(n: u64, m: u64, s: u64, from: u64, to: u64) -> BigInt {
    let failures = n - m;
    // Nonzero terms need i <= m and s - i <= n - m.
    let lo = from.max(s.saturating_sub(failures));
    let hi = to.min(m).min(s);
    if lo > hi {
        return BigInt::zero();
    }
    let mut a = binom_u(m, lo);
    let mut b = binom_u(failures, s - lo);
    let mut acc = BigInt::zero();
    for i in lo..=hi {
        acc += &a * &b;
        if i == hi {
            break;
        }
        // C(m, i+1) = C(m, i) (m - i) / (i + 1)
        a *= m - i;
        a /= i + 1;
        // C(f, r-1) = C(f, r) r / (f - r + 1), with r = s - i
        b *= s - i;
        b /= failures - (s - i) + 1;
    }
    acc
}

/// [`ExactOracle::pmf`] with default settings.
pub fn pmf_exact(n: u64, m: u64, s: u64, j: u64) -> Result<ExactRational> {
    ExactOracle::default().pmf(n, m, s, j)
}

/// [`ExactOracle::left_tail`] with default settings.
pub fn left_tail_exact(n: u64, m: u64, s: u64, k: u64) -> Result<ExactRational> {
    ExactOracle::default().left_tail(n, m, s, k)
}

/// [`ExactOracle::right_tail`] with default settings.
pub fn right_tail_exact(n: u64, m: u64, s: u64, k: u64) -> Result<ExactRational> {
    ExactOracle::default().right_tail(n, m, s, k)
}

/// [`ExactOracle::upper_bound`] with default settings.
pub fn upper_bound_exact(q: &QueryInstance) -> Result<u64> {
    ExactOracle::default().upper_bound(q)
}

/// [`ExactOracle::lower_bound`] with default settings.
pub fn lower_bound_exact(q: &QueryInstance) -> Result<u64> {
    ExactOracle::default().lower_bound(q)
}
