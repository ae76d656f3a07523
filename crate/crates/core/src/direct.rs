//! Left tails from direct combinatorial products.
//!
//! The anchor term is evaluated as a ratio of falling factorials with the
//! multiply/divide interleaving that keeps the running value near one, so no
//! intermediate overflows or underflows. Neighbouring terms follow from the
//! exact term-ratio recurrence.

use rug::Float;

use crate::error::{BoundError, Result};
use crate::precision::PrecisionContext;
use crate::tail::{
    accumulate, anchor_index, check_domain, structural_left_tail, Support, TailSum, TermSequence,
};

/// Extremes of the running value seen while evaluating a balanced product.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTrace {
    pub value: Float,
    pub min_running: Float,
    pub max_running: Float,
    pub steps: u64,
}

/// `prod(numer) / prod(denom)`, multiplying while the running value is below
/// one and dividing otherwise. Either list is drained once the other runs out.
pub fn balanced_product<N, D>(numer: N, denom: D, ctx: &PrecisionContext) -> Result<Float>
where
    N: IntoIterator<Item = u64>,
    D: IntoIterator<Item = u64>,
{
    run_balanced(numer, denom, ctx.prec_bits(), |_| {})
}

/// [`balanced_product`] that also records the range of the running value.
pub fn balanced_product_traced<N, D>(
    numer: N,
    denom: D,
    ctx: &PrecisionContext,
) -> Result<ProductTrace>
where
    N: IntoIterator<Item = u64>,
    D: IntoIterator<Item = u64>,
{
    let prec = ctx.prec_bits();
    let mut min_running = Float::with_val(prec, 1);
    let mut max_running = Float::with_val(prec, 1);
    let mut steps = 0u64;
    let value = run_balanced(numer, denom, prec, |v| {
        steps += 1;
        if *v < min_running {
            min_running.clone_from(v);
        }
        if *v > max_running {
            max_running.clone_from(v);
        }
    })?;
    Ok(ProductTrace {
        value,
        min_running,
        max_running,
        steps,
    })
}

fn run_balanced<N, D, F>(numer: N, denom: D, prec: u32, mut observe: F) -> Result<Float>
where
    N: IntoIterator<Item = u64>,
    D: IntoIterator<Item = u64>,
    F: FnMut(&Float),
{
    let mut numer = numer.into_iter();
    let mut denom = denom.into_iter();
    let mut v = Float::with_val(prec, 1);
    loop {
        let multiplied = if v < 1 {
            match numer.next() {
                Some(t) => {
                    v *= t;
                    true
                }
                None => divide_next(&mut v, &mut denom)?,
            }
        } else {
            match divide_next(&mut v, &mut denom)? {
                true => true,
                false => match numer.next() {
                    Some(t) => {
                        v *= t;
                        true
                    }
                    None => false,
                },
            }
        };
        if !multiplied {
            return Ok(v);
        }
        observe(&v);
    }
}

fn divide_next<D: Iterator<Item = u64>>(v: &mut Float, denom: &mut D) -> Result<bool> {
    match denom.next() {
        Some(0) => Err(BoundError::domain("zero denominator term")),
        Some(t) => {
            *v /= t;
            Ok(true)
        }
        None => Ok(false),
    }
}

/// `p(n, m, s, j) = T(m, j) T(n - m, s - j) T(s, j) / (j! T(n, s))` with
/// `T(h, j) = h (h - 1) ... (h - j + 1)`.
pub fn pmf_direct(n: u64, m: u64, s: u64, j: u64, ctx: &PrecisionContext) -> Result<Float> {
    check_domain(n, m, s, j)?;
    if !Support::new(n, m, s).contains(j) {
        return Ok(ctx.float(0));
    }
    let failures = n - m;
    let numer = falling(failures, s - j)
        .chain(falling(m, j))
        .chain(falling(s, j));
    let denom = falling(n, s).chain(1..=j);
    balanced_product(numer, denom, ctx)
}

/// Factors of `T(h, len)`, largest first.
fn falling(h: u64, len: u64) -> impl Iterator<Item = u64> {
    (h - len + 1..=h).rev()
}

/// Numerator and denominator of `p(j + 1) / p(j)`.
fn ratio_parts(n: u64, m: u64, s: u64, j: u64) -> (u128, u128) {
    let num = (m - j) as u128 * (s - j) as u128;
    let den = (j + 1) as u128 * (n - m + j + 1 - s) as u128;
    (num, den)
}

/// `p(n, m, s, j + 1) / p(n, m, s, j) = (m - j)(s - j) / ((j + 1)(n - m - s + j + 1))`.
///
/// Returns [`BoundError::StructuralZero`] when `j + 1 > min(s, m)`.
pub fn term_ratio(n: u64, m: u64, s: u64, j: u64, ctx: &PrecisionContext) -> Result<Float> {
    check_domain(n, m, s, j)?;
    if j + 1 > s.min(m) {
        return Err(BoundError::StructuralZero);
    }
    if (n - m) + j < s {
        return Err(BoundError::domain(format!(
            "term {j} lies below the support (n - m - s + j + 1 <= 0)"
        )));
    }
    let (num, den) = ratio_parts(n, m, s, j);
    let mut r = ctx.float(num);
    r /= ctx.float(den);
    Ok(r)
}

/// `L(n, m, s, k)` by the direct method.
pub fn left_tail_direct(n: u64, m: u64, s: u64, k: u64, ctx: &PrecisionContext) -> Result<Float> {
    Ok(left_tail_direct_terms(n, m, s, k, ctx)?.value)
}

/// [`left_tail_direct`] together with the summed term range.
pub fn left_tail_direct_terms(
    n: u64,
    m: u64,
    s: u64,
    k: u64,
    ctx: &PrecisionContext,
) -> Result<TailSum> {
    check_domain(n, m, s, k)?;
    ctx.check_for(k)?;
    let prec = ctx.prec_bits();
    let support = Support::new(n, m, s);
    if let Some(c) = structural_left_tail(k, support) {
        return Ok(TailSum::constant(prec, c));
    }

    let anchor = anchor_index(n, m, s, k, support);
    let anchor_value = pmf_direct(n, m, s, anchor, ctx)?;
    let threshold = ctx.float(ctx.trunc_threshold());

    let mut down = Vec::new();
    let mut term = anchor_value.clone();
    let mut j = anchor;
    while j > support.lo {
        let (num, den) = ratio_parts(n, m, s, j - 1);
        term *= den;
        term /= num;
        if term < threshold {
            break;
        }
        down.push(term.clone());
        j -= 1;
    }
    let lowest_j = j;

    // k < support.hi here, so every step up to k stays inside the support.
    let mut up = Vec::new();
    let mut term = anchor_value.clone();
    let mut j = anchor;
    while j < k {
        let (num, den) = ratio_parts(n, m, s, j);
        term *= num;
        term /= den;
        if term < threshold {
            break;
        }
        up.push(term.clone());
        j += 1;
    }
    let highest_j = j;

    let value = accumulate(prec, &anchor_value, &down, &up);
    Ok(TailSum {
        value,
        terms: Some(TermSequence {
            anchor_j: anchor,
            anchor_value,
            lowest_j,
            highest_j,
        }),
    })
}
