//! Sharp bounds by bisection over `m` on computed tails.
//!
//! The search keeps a bracket `(low, high)` whose computed left tails
//! satisfy `tail(low) >= delta > tail(high)` and halves it until the ends are
//! adjacent. Lower bounds come from upper bounds of the complementary query,
//! `m_d(n, s, k) = n - m_u(n, s, s - k)`.

use std::fmt;
use std::str::FromStr;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::direct::{left_tail_direct, pmf_direct};
use crate::error::{BoundError, Result};
use crate::model::{exact_delta, rational_to_float, ExactOracle, ExactRational, QueryInstance};
use crate::precision::{error_target, PrecisionContext};
use crate::stirling::LogFactorialTable;
use crate::tail::check_domain;

/// Strategy used to evaluate tail probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailEngine {
    Direct,
    Stirling,
    Exact,
}

impl TailEngine {
    /// Largest population for which [`TailEngine::auto`] picks the exact engine.
    pub const AUTO_EXACT_MAX_N: u64 = ExactOracle::DEFAULT_MAX_N;

    /// Exact rationals for small populations, log-space otherwise.
    pub fn auto(n: u64) -> Self {
        if n <= Self::AUTO_EXACT_MAX_N {
            TailEngine::Exact
        } else {
            TailEngine::Stirling
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TailEngine::Direct => "direct",
            TailEngine::Stirling => "stirling",
            TailEngine::Exact => "exact",
        }
    }
}

/// Parses an engine name, resolving `"auto"` by population size.
pub fn resolve_engine(name: &str, n: u64) -> Result<TailEngine> {
    match name {
        "auto" => Ok(TailEngine::auto(n)),
        other => other.parse(),
    }
}

impl fmt::Display for TailEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TailEngine {
    type Err = BoundError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(TailEngine::Direct),
            "stirling" => Ok(TailEngine::Stirling),
            "exact" => Ok(TailEngine::Exact),
            other => Err(BoundError::domain(format!("unknown engine '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How many bound statements share one failure budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiplicityPolicy {
    pub two_sided: bool,
    pub condition_count: u32,
}

impl MultiplicityPolicy {
    pub fn new(two_sided: bool, condition_count: u32) -> Result<Self> {
        if condition_count < 1 {
            return Err(BoundError::domain("condition count must be at least 1"));
        }
        Ok(MultiplicityPolicy {
            two_sided,
            condition_count,
        })
    }

    pub fn one_sided() -> Self {
        MultiplicityPolicy {
            two_sided: false,
            condition_count: 1,
        }
    }

    pub fn two_sided() -> Self {
        MultiplicityPolicy {
            two_sided: true,
            condition_count: 1,
        }
    }

    /// Number of bound statements covered by the budget.
    pub fn statements(&self) -> u64 {
        self.condition_count as u64 * if self.two_sided { 2 } else { 1 }
    }
}

/// Per-statement failure probability under a union bound: `delta / j` for
/// one-sided and `delta / (2 j)` for two-sided statements over `j` conditions.
pub fn adjust_delta(delta: f64, policy: &MultiplicityPolicy) -> f64 {
    delta / policy.statements() as f64
}

/// Digits and error target sufficient for a within-one bound:
/// target `delta / (4 n k)`, digits `ceil(log10(1 / target)) + 9`, at least 16.
pub fn choose_precision(n: u64, k: u64, delta: f64) -> PrecisionContext {
    let target = error_target(n, k, delta);
    let digits = ((1.0 / target).log10().ceil() as u32 + 9).max(PrecisionContext::MIN_DIGITS);
    PrecisionContext::for_query(digits, n, k, delta).expect("derived context is valid")
}

/// Context covering both sides of `q`: the given digit count, or
/// [`choose_precision`] at the larger of `k` and `s - k`.
pub fn precision_for(q: &QueryInstance, digits: Option<u32>) -> Result<PrecisionContext> {
    let k_eff = q.k().max(q.s() - q.k());
    match digits {
        Some(d) => PrecisionContext::for_query(d, q.n(), k_eff, q.delta()),
        None => Ok(choose_precision(q.n(), k_eff, q.delta())),
    }
}

/// Left tail `L(n, m, s, k)` with the chosen engine.
pub fn left_tail(
    engine: TailEngine,
    n: u64,
    m: u64,
    s: u64,
    k: u64,
    ctx: &PrecisionContext,
) -> Result<Float> {
    match engine {
        TailEngine::Direct => left_tail_direct(n, m, s, k, ctx),
        TailEngine::Stirling => LogFactorialTable::for_population(ctx, n)
            .left_tail_terms(n, m, s, k, ctx)
            .map(|t| t.value),
        TailEngine::Exact => Ok(rational_to_float(
            &ExactOracle::default().left_tail(n, m, s, k)?,
            ctx.prec_bits(),
        )),
    }
}

/// Right tail `R(n, m, s, k)`. The floating engines use the identity
/// `R(n, m, s, k) = L(n, n - m, s, s - k)`, which avoids cancellation.
pub fn right_tail(
    engine: TailEngine,
    n: u64,
    m: u64,
    s: u64,
    k: u64,
    ctx: &PrecisionContext,
) -> Result<Float> {
    check_domain(n, m, s, k)?;
    match engine {
        TailEngine::Exact => Ok(rational_to_float(
            &ExactOracle::default().right_tail(n, m, s, k)?,
            ctx.prec_bits(),
        )),
        _ => left_tail(engine, n, n - m, s, s - k, &ctx.tightened_for(s - k)),
    }
}

/// Difference between consecutive left tails,
/// `L(m) - L(m + 1) = p(n, m, s, k) (s - k) / (n - m)`.
pub fn gap(
    n: u64,
    m: u64,
    s: u64,
    k: u64,
    engine: TailEngine,
    ctx: &PrecisionContext,
) -> Result<Float> {
    check_domain(n, m, s, k)?;
    if m >= n {
        return Err(BoundError::domain(format!(
            "gap needs m < n, got m = {m}, n = {n}"
        )));
    }
    let p = match engine {
        TailEngine::Direct => pmf_direct(n, m, s, k, ctx)?,
        TailEngine::Stirling => match LogFactorialTable::for_population(ctx, n).log_pmf(n, m, s, k)
        {
            Ok(log_p) => log_p.exp(),
            Err(BoundError::StructuralZero) => ctx.float(0),
            Err(e) => return Err(e),
        },
        TailEngine::Exact => {
            rational_to_float(&ExactOracle::default().pmf(n, m, s, k)?, ctx.prec_bits())
        }
    };
    let mut g = p * (s - k);
    g /= n - m;
    Ok(g)
}

/// Result of a bound search.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    /// The query as searched (its `delta` is the per-side value used).
    pub instance: QueryInstance,
    pub m_hat: u64,
    pub side: Side,
    pub engine: TailEngine,
    pub digits: u32,
    /// Computed tail at `m_hat`; at least `delta`.
    pub tail_at_m_hat: Float,
    /// Computed tail one step outside the bound (`m_hat + 1` for upper,
    /// `m_hat - 1` for lower bounds); below `delta`.
    pub tail_beyond_m_hat: Float,
    /// Tail evaluations spent, seeds included.
    pub iterations: u32,
}

impl BoundResult {
    pub fn delta_used(&self) -> f64 {
        self.instance.delta()
    }
}

/// Adjacent-or-not pair of counts whose computed tails straddle `delta`.
/// Only built from evaluated (or structurally known) endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBracket {
    low: u64,
    high: u64,
    tail_low: Float,
    tail_high: Float,
}

impl SearchBracket {
    pub fn low(&self) -> u64 {
        self.low
    }

    pub fn high(&self) -> u64 {
        self.high
    }

    pub fn tail_low(&self) -> &Float {
        &self.tail_low
    }

    pub fn tail_high(&self) -> &Float {
        &self.tail_high
    }

    pub fn width(&self) -> u64 {
        self.high - self.low
    }

    /// Builds the starting bracket from the seeds, evaluating each seed once.
    pub fn seeded(q: &QueryInstance, engine: TailEngine, ctx: &PrecisionContext) -> Result<Self> {
        let mut probe = Probe::new(q, engine, ctx)?;
        Self::from_seeds(&mut probe)
    }

    fn from_seeds(probe: &mut Probe) -> Result<Self> {
        let (n, s, k) = (probe.q.n(), probe.q.s(), probe.q.k());
        debug_assert!(k < s);
        let (mut low, mut tail_low) = probe.seed_low()?;
        // First m with a structurally zero left tail.
        let zero_point = n - (s - k) + 1;
        let hint = start_high(n, s, k, probe.q.delta()).max(low + 1);
        let (high, tail_high) = if hint >= zero_point {
            (zero_point, probe.ctx.float(0))
        } else {
            let (tail, meets) = probe.eval(hint)?;
            if meets {
                low = hint;
                tail_low = tail;
                (zero_point, probe.ctx.float(0))
            } else {
                (hint, tail)
            }
        };
        let bracket = SearchBracket {
            low,
            high,
            tail_low,
            tail_high,
        };
        debug_assert!(bracket.low < bracket.high);
        Ok(bracket)
    }
}

/// Evaluates computed tails for one query and counts evaluations.
struct Probe<'a> {
    q: &'a QueryInstance,
    engine: TailEngine,
    ctx: PrecisionContext,
    table: Option<LogFactorialTable>,
    oracle: ExactOracle,
    delta: Float,
    delta_exact: ExactRational,
    evaluations: u32,
}

impl<'a> Probe<'a> {
    fn new(q: &'a QueryInstance, engine: TailEngine, ctx: &PrecisionContext) -> Result<Self> {
        let ctx = ctx.tightened_for(q.k());
        match engine {
            TailEngine::Exact => {
                let oracle = ExactOracle::default();
                if q.n() > oracle.max_n {
                    return Err(BoundError::OracleTooLarge {
                        n: q.n(),
                        limit: oracle.max_n,
                    });
                }
            }
            _ => ctx.check_for(q.k())?,
        }
        let table = (engine == TailEngine::Stirling)
            .then(|| LogFactorialTable::for_population(&ctx, q.n()));
        Ok(Probe {
            q,
            engine,
            ctx,
            table,
            oracle: ExactOracle::default(),
            delta: ctx.float(q.delta()),
            delta_exact: exact_delta(q.delta()),
            evaluations: 0,
        })
    }

    /// Computed tail at `m` and whether it reaches `delta`.
    fn eval(&mut self, m: u64) -> Result<(Float, bool)> {
        self.evaluations += 1;
        let (n, s, k) = (self.q.n(), self.q.s(), self.q.k());
        match self.engine {
            TailEngine::Exact => {
                let tail = self.oracle.left_tail(n, m, s, k)?;
                let meets = tail >= self.delta_exact;
                Ok((rational_to_float(&tail, self.ctx.prec_bits()), meets))
            }
            TailEngine::Direct => {
                let tail = left_tail_direct(n, m, s, k, &self.ctx)?;
                let meets = tail >= self.delta;
                Ok((tail, meets))
            }
            TailEngine::Stirling => {
                let table = self.table.as_ref().expect("table built for stirling");
                let tail = table.left_tail_terms(n, m, s, k, &self.ctx)?.value;
                let meets = tail >= self.delta;
                Ok((tail, meets))
            }
        }
    }

    /// `floor(k n / s)` if its computed tail reaches `delta`, else 0
    /// (whose tail is exactly 1).
    fn seed_low(&mut self) -> Result<(u64, Float)> {
        let (n, s, k) = (self.q.n(), self.q.s(), self.q.k());
        let guess = (k as u128 * n as u128 / s as u128) as u64;
        if guess > 0 {
            let (tail, meets) = self.eval(guess)?;
            if meets {
                return Ok((guess, tail));
            }
        }
        Ok((0, self.ctx.float(1)))
    }
}

/// Verified low seed: `floor(k n / s)` when its computed tail is at least
/// `delta`, otherwise 0.
pub fn start_low(q: &QueryInstance, engine: TailEngine, ctx: &PrecisionContext) -> Result<u64> {
    let mut probe = Probe::new(q, engine, ctx)?;
    Ok(probe.seed_low()?.0)
}

/// Hoeffding seed `min(ceil(n (k/s + sqrt(ln(1/delta) / (2 s)))), n)`.
/// Unverified; [`SearchBracket::seeded`] checks it.
pub fn start_high(n: u64, s: u64, k: u64, delta: f64) -> u64 {
    let radius = ((1.0 / delta).ln() / (2.0 * s as f64)).sqrt();
    let frac = k as f64 / s as f64 + radius;
    if frac >= 1.0 {
        return n;
    }
    let h = (n as f64 * frac).ceil();
    if h >= n as f64 {
        n
    } else {
        h as u64
    }
}

/// `m_hat` with computed `L(m_hat) >= delta > L(m_hat + 1)`.
pub fn upper_bound(
    q: &QueryInstance,
    engine: TailEngine,
    ctx: &PrecisionContext,
) -> Result<BoundResult> {
    let mut probe = Probe::new(q, engine, ctx)?;
    let digits = probe.ctx.digits();
    if q.k() == q.s() {
        // L = 1 for every m in 0..=n.
        return Ok(BoundResult {
            instance: *q,
            m_hat: q.n(),
            side: Side::Upper,
            engine,
            digits,
            tail_at_m_hat: probe.ctx.float(1),
            tail_beyond_m_hat: probe.ctx.float(0),
            iterations: 0,
        });
    }

    let mut bracket = SearchBracket::from_seeds(&mut probe)?;
    while bracket.width() > 1 {
        let mid = bracket.low + (bracket.high - bracket.low) / 2;
        let (tail, meets) = probe.eval(mid)?;
        if meets {
            bracket.low = mid;
            bracket.tail_low = tail;
        } else {
            bracket.high = mid;
            bracket.tail_high = tail;
        }
        debug_assert!(bracket.tail_low >= probe.delta || engine == TailEngine::Exact);
    }

    Ok(BoundResult {
        instance: *q,
        m_hat: bracket.low,
        side: Side::Upper,
        engine,
        digits,
        tail_at_m_hat: bracket.tail_low,
        tail_beyond_m_hat: bracket.tail_high,
        iterations: probe.evaluations,
    })
}

/// `n - m_hat` of the complementary query; tails reported are the right
/// tails of the original query at `m_hat` and `m_hat - 1`.
pub fn lower_bound(
    q: &QueryInstance,
    engine: TailEngine,
    ctx: &PrecisionContext,
) -> Result<BoundResult> {
    let dual = upper_bound(&q.complement(), engine, ctx)?;
    Ok(BoundResult {
        instance: *q,
        m_hat: q.n() - dual.m_hat,
        side: Side::Lower,
        ..dual
    })
}
