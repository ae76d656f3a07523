//! Sharp PAC bounds on the number of population items satisfying a
//! condition, inferred from a uniform without-replacement sample.
//!
//! Given a population of `n` items and a sample of `s` of them in which `k`
//! satisfy the condition, [`upper_bound`] and [`lower_bound`] return the
//! extreme counts `m` whose hypergeometric tail probability still reaches
//! `delta`. Tails are evaluated by one of three engines:
//!
//! * [`TailEngine::Direct`]: balanced products of falling factorials and the
//!   term-ratio recurrence,
//! * [`TailEngine::Stirling`]: log-space terms from a seven-term Stirling
//!   series,
//! * [`TailEngine::Exact`]: exact rationals, for small populations.
//!
//! Floating engines run in MPFR arithmetic at a caller-chosen digit count
//! (see [`choose_precision`]); with enough digits the computed bound is
//! within one of the exact bound.

pub mod cli;
pub mod coverage;
pub mod direct;
pub mod error;
pub mod model;
pub mod precision;
pub mod solver;
pub mod stirling;
pub mod tail;

pub use coverage::{coverage_run, sample_successes, CoverageReport, CoverageSpec};
pub use direct::{balanced_product, left_tail_direct, pmf_direct, term_ratio};
pub use error::{BoundError, Result};
pub use model::{
    binom, left_tail_exact, lower_bound_exact, pmf_exact, right_tail_exact, upper_bound_exact,
    ExactOracle, ExactRational, QueryInstance,
};
pub use precision::{format_real, PrecisionContext};
pub use rug::Float;
pub use solver::{
    adjust_delta, choose_precision, gap, left_tail, lower_bound, precision_for, resolve_engine,
    right_tail, start_high, start_low, upper_bound, BoundResult, MultiplicityPolicy, SearchBracket,
    Side, TailEngine,
};
pub use stirling::{left_tail_stirling, log_factorial, log_pmf, log_term_step, LogFactorialTable};
pub use tail::{TailSum, TermSequence};
