//! Arithmetic context shared by the floating tail engines.
//!
//! A [`PrecisionContext`] is an immutable value passed explicitly to every
//! evaluation. Arithmetic runs on MPFR floats whose mantissa width is derived
//! from the requested count of significant decimal digits.

use rug::Float;

use crate::error::{BoundError, Result};

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Significant digits, absolute error target and per-term truncation cutoff
/// for one tail evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionContext {
    digits: u32,
    abs_error_target: f64,
    trunc_threshold: f64,
}

impl PrecisionContext {
    /// Smallest accepted digit count (roughly an IEEE double).
    pub const MIN_DIGITS: u32 = 16;

    /// Digits of headroom a context must keep between its unit roundoff and
    /// its absolute error target to be considered feasible.
    pub const HEADROOM_DIGITS: u32 = 2;

    pub fn new(digits: u32, abs_error_target: f64, trunc_threshold: f64) -> Result<Self> {
        if digits < Self::MIN_DIGITS {
            return Err(BoundError::domain(format!(
                "digits must be at least {}, got {digits}",
                Self::MIN_DIGITS
            )));
        }
        if !(abs_error_target > 0.0 && abs_error_target.is_finite()) {
            return Err(BoundError::domain(format!(
                "absolute error target must be positive, got {abs_error_target}"
            )));
        }
        if !(trunc_threshold > 0.0 && trunc_threshold.is_finite()) {
            return Err(BoundError::domain(format!(
                "truncation threshold must be positive, got {trunc_threshold}"
            )));
        }
        Ok(PrecisionContext {
            digits,
            abs_error_target,
            trunc_threshold,
        })
    }

    /// Context for a bound query: error target `delta / (4 n k)` and
    /// truncation cutoff `target / (10 (k + 1))`.
    ///
    /// `k = 0` is treated as `k = 1` in the target.
    pub fn for_query(digits: u32, n: u64, k: u64, delta: f64) -> Result<Self> {
        let target = error_target(n, k, delta);
        Self::new(digits, target, default_trunc(target, k))
    }

    /// Context for a bare tail evaluation with no associated `delta`: the
    /// target keeps nine digits of slack below the working precision.
    pub fn for_digits(digits: u32, k: u64) -> Result<Self> {
        let target = 10f64.powi(9 - digits as i32);
        Self::new(digits, target, default_trunc(target, k))
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn abs_error_target(&self) -> f64 {
        self.abs_error_target
    }

    pub fn trunc_threshold(&self) -> f64 {
        self.trunc_threshold
    }

    /// MPFR mantissa width in bits for this digit count.
    pub fn prec_bits(&self) -> u32 {
        (self.digits as f64 * LOG2_10).ceil() as u32
    }

    /// Returns a copy whose truncation cutoff also satisfies
    /// `trunc_threshold <= abs_error_target / (10 (k + 1))`.
    pub fn tightened_for(&self, k: u64) -> Self {
        let mut ctx = *self;
        ctx.trunc_threshold = ctx
            .trunc_threshold
            .min(default_trunc(ctx.abs_error_target, k));
        ctx
    }

    /// Fails when the working precision cannot resolve the error target.
    pub fn ensure_feasible(&self) -> Result<()> {
        let resolution = 10f64.powi(Self::HEADROOM_DIGITS as i32 - self.digits as i32);
        if self.abs_error_target < resolution {
            return Err(BoundError::PrecisionInfeasible {
                digits: self.digits,
                target: self.abs_error_target,
            });
        }
        Ok(())
    }

    /// Checks feasibility and the truncation invariant for a tail over
    /// `k + 1` terms.
    pub fn check_for(&self, k: u64) -> Result<()> {
        self.ensure_feasible()?;
        if self.trunc_threshold > self.abs_error_target / (k as f64 + 1.0) {
            return Err(BoundError::domain(format!(
                "truncation threshold {:e} exceeds error target / (k + 1) for k = {k}",
                self.trunc_threshold
            )));
        }
        Ok(())
    }

    /// A float at context precision.
    pub fn float<T>(&self, value: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.prec_bits(), value)
    }
}

/// Decimal rendering of a computed value with `digits` significant digits.
pub fn format_real(value: &Float, digits: u32) -> String {
    value.to_string_radix(10, Some(digits as usize))
}

pub(crate) fn error_target(n: u64, k: u64, delta: f64) -> f64 {
    delta / (4.0 * n as f64 * k.max(1) as f64)
}

fn default_trunc(target: f64, k: u64) -> f64 {
    target / (10.0 * (k as f64 + 1.0))
}
