//! Monte Carlo check that computed bounds fail no more often than `delta`.
//!
//! Each trial draws a uniform without-replacement sample from a synthetic
//! population with a known count `m`, computes both one-sided bounds at
//! `delta`, and records whether either excludes `m`. Trial `t` draws from the
//! ChaCha stream `t` of the run seed, so results do not depend on how trials
//! are scheduled.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BoundError, Result};
use crate::model::QueryInstance;
use crate::solver::{lower_bound, precision_for, upper_bound, TailEngine};

/// Number of successes in a size-`s` sample drawn without replacement from
/// `n` items of which `m` are successes.
pub fn sample_successes<R: Rng + ?Sized>(n: u64, m: u64, s: u64, rng: &mut R) -> u64 {
    assert!(m <= n && s <= n, "need m <= n and s <= n");
    let mut successes = 0u64;
    for drawn in 0..s {
        let remaining = n - drawn;
        let successes_left = m - successes;
        if successes_left == 0 {
            break;
        }
        if successes_left == remaining {
            return successes + (s - drawn);
        }
        if rng.random_range(0..remaining) < successes_left {
            successes += 1;
        }
    }
    successes
}

/// Generator for one trial of a seeded run.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Population, sample and run settings for [`coverage_run`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    pub n: u64,
    pub m: u64,
    pub s: u64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: u64,
    /// Trials whose upper bound fell below the true `m`.
    pub upper_failures: u64,
    /// Trials whose lower bound rose above the true `m`.
    pub lower_failures: u64,
    pub empirical_upper_rate: f64,
    pub empirical_lower_rate: f64,
    pub seed: u64,
}

impl CoverageReport {
    /// Three-sigma Monte Carlo allowance above `delta` for `trials` trials.
    pub fn slack(delta: f64, trials: u64) -> f64 {
        3.0 * (delta * (1.0 - delta) / trials as f64).sqrt()
    }
}

/// Runs `spec.trials` sampling trials and counts bound failures.
///
/// Bounds depend on the trial only through the observed count, so each
/// distinct count is solved once.
pub fn coverage_run(
    spec: &CoverageSpec,
    engine: TailEngine,
    digits: Option<u32>,
) -> Result<CoverageReport> {
    if spec.trials == 0 {
        return Err(BoundError::domain("trials must be at least 1"));
    }
    if spec.m > spec.n {
        return Err(BoundError::domain(format!(
            "need m <= n, got m = {}, n = {}",
            spec.m, spec.n
        )));
    }
    // Validates n, s and delta.
    QueryInstance::new(spec.n, spec.s, 0, spec.delta)?;

    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for trial in 0..spec.trials {
        let mut rng = trial_rng(spec.seed, trial);
        *counts
            .entry(sample_successes(spec.n, spec.m, spec.s, &mut rng))
            .or_default() += 1;
    }

    let mut upper_failures = 0;
    let mut lower_failures = 0;
    for (&k, &times) in &counts {
        let q = QueryInstance::new(spec.n, spec.s, k, spec.delta)?;
        let ctx = precision_for(&q, digits)?;
        if spec.m > upper_bound(&q, engine, &ctx)?.m_hat {
            upper_failures += times;
        }
        if spec.m < lower_bound(&q, engine, &ctx)?.m_hat {
            lower_failures += times;
        }
    }

    Ok(CoverageReport {
        trials: spec.trials,
        upper_failures,
        lower_failures,
        empirical_upper_rate: upper_failures as f64 / spec.trials as f64,
        empirical_lower_rate: lower_failures as f64 / spec.trials as f64,
        seed: spec.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_populations() {
        let mut rng = trial_rng(7, 0);
        assert_eq!(sample_successes(50, 50, 20, &mut rng), 20);
        assert_eq!(sample_successes(50, 0, 20, &mut rng), 0);
        assert_eq!(sample_successes(50, 17, 50, &mut rng), 17);
    }

    #[test]
    fn sample_mean_matches_hypergeometric_mean() {
        let (n, m, s) = (100u64, 30u64, 20u64);
        let trials = 100_000u64;
        let total: u64 = (0..trials)
            .map(|t| sample_successes(n, m, s, &mut trial_rng(11, t)))
            .sum();
        let mean = total as f64 / trials as f64;
        let exact_mean = s as f64 * m as f64 / n as f64;
        let p = m as f64 / n as f64;
        let var = s as f64 * p * (1.0 - p) * (n - s) as f64 / (n - 1) as f64;
        let sigma = (var / trials as f64).sqrt();
        assert!((mean - exact_mean).abs() <= 3.0 * sigma, "{mean}");
    }

    #[test]
    fn same_seed_same_report() {
        let spec = CoverageSpec {
            n: 500,
            m: 120,
            s: 60,
            delta: 0.1,
            trials: 300,
            seed: 42,
        };
        let a = coverage_run(&spec, TailEngine::Exact, None).unwrap();
        let b = coverage_run(&spec, TailEngine::Exact, None).unwrap();
        assert_eq!(a, b);
        let c = coverage_run(&CoverageSpec { seed: 43, ..spec }, TailEngine::Exact, None).unwrap();
        assert_eq!(c.seed, 43);
    }

    #[test]
    fn single_trial_rates_are_zero_or_one() {
        let spec = CoverageSpec {
            n: 200,
            m: 70,
            s: 20,
            delta: 0.05,
            trials: 1,
            seed: 1,
        };
        let r = coverage_run(&spec, TailEngine::Exact, None).unwrap();
        assert!([0.0, 1.0].contains(&r.empirical_upper_rate));
        assert!([0.0, 1.0].contains(&r.empirical_lower_rate));
    }

    #[test]
    fn delta_near_one_still_covers() {
        let spec = CoverageSpec {
            n: 300,
            m: 90,
            s: 40,
            delta: 0.999,
            trials: 2_000,
            seed: 5,
        };
        let r = coverage_run(&spec, TailEngine::Exact, None).unwrap();
        let limit = 0.999 + CoverageReport::slack(0.999, 2_000);
        assert!(r.empirical_upper_rate <= limit);
        assert!(r.empirical_lower_rate <= limit);
    }

    #[test]
    fn rejects_bad_specs() {
        let spec = CoverageSpec {
            n: 100,
            m: 10,
            s: 10,
            delta: 0.05,
            trials: 0,
            seed: 1,
        };
        assert!(coverage_run(&spec, TailEngine::Exact, None).is_err());
        let spec = CoverageSpec {
            trials: 5,
            m: 101,
            ..spec
        };
        assert!(coverage_run(&spec, TailEngine::Exact, None).is_err());
    }
}
