//! Python module `sketchbound`.
//!
//! Counts are Python ints, probabilities are floats on input and decimal
//! strings on output (computed tails carry more digits than a double).

use num_bigint::BigInt;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use sketchbound::coverage::CoverageSpec;
use sketchbound::{
    format_real, BoundError, MultiplicityPolicy, PrecisionContext, QueryInstance, TailEngine,
};

create_exception!(sketchbound, PrecisionInfeasibleError, PyArithmeticError);

fn to_py(err: BoundError) -> PyErr {
    match err {
        BoundError::PrecisionInfeasible { .. } => {
            PrecisionInfeasibleError::new_err(err.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn engine(name: &str, n: u64) -> PyResult<TailEngine> {
    sketchbound::resolve_engine(name, n).map_err(to_py)
}

#[pyclass(name = "BoundResult", frozen, get_all, skip_from_py_object)]
#[derive(Debug, Clone)]
pub struct PyBoundResult {
    n: u64,
    s: u64,
    k: u64,
    delta: f64,
    side: String,
    m_hat: u64,
    engine: String,
    digits: u32,
    tail_at_m_hat: String,
    tail_beyond_m_hat: String,
    iterations: u32,
}

impl From<sketchbound::BoundResult> for PyBoundResult {
    fn from(r: sketchbound::BoundResult) -> Self {
        PyBoundResult {
            n: r.instance.n(),
            s: r.instance.s(),
            k: r.instance.k(),
            delta: r.instance.delta(),
            side: r.side.name().to_string(),
            m_hat: r.m_hat,
            engine: r.engine.name().to_string(),
            digits: r.digits,
            tail_at_m_hat: format_real(&r.tail_at_m_hat, r.digits),
            tail_beyond_m_hat: format_real(&r.tail_beyond_m_hat, r.digits),
            iterations: r.iterations,
        }
    }
}

#[pymethods]
impl PyBoundResult {
    fn __repr__(&self) -> String {
        format!(
            "BoundResult(side='{}', m_hat={}, engine='{}', digits={}, iterations={})",
            self.side, self.m_hat, self.engine, self.digits, self.iterations
        )
    }
}

#[pyclass(name = "CoverageReport", frozen, get_all, skip_from_py_object)]
#[derive(Debug, Clone)]
pub struct PyCoverageReport {
    trials: u64,
    upper_failures: u64,
    lower_failures: u64,
    empirical_upper_rate: f64,
    empirical_lower_rate: f64,
    seed: u64,
}

#[pymethods]
impl PyCoverageReport {
    fn __repr__(&self) -> String {
        format!(
            "CoverageReport(trials={}, upper_rate={}, lower_rate={}, seed={})",
            self.trials, self.empirical_upper_rate, self.empirical_lower_rate, self.seed
        )
    }
}

fn bound(
    side: sketchbound::Side,
    n: u64,
    s: u64,
    k: u64,
    delta: f64,
    engine_name: &str,
    digits: Option<u32>,
) -> PyResult<PyBoundResult> {
    let q = QueryInstance::new(n, s, k, delta).map_err(to_py)?;
    let ctx = sketchbound::precision_for(&q, digits).map_err(to_py)?;
    let engine = engine(engine_name, n)?;
    let r = match side {
        sketchbound::Side::Upper => sketchbound::upper_bound(&q, engine, &ctx),
        sketchbound::Side::Lower => sketchbound::lower_bound(&q, engine, &ctx),
    };
    r.map(PyBoundResult::from).map_err(to_py)
}

/// Largest population count whose left tail reaches `delta`.
#[pyfunction]
#[pyo3(signature = (n, s, k, delta, engine = "auto", digits = None))]
fn upper_bound(
    n: u64,
    s: u64,
    k: u64,
    delta: f64,
    engine: &str,
    digits: Option<u32>,
) -> PyResult<PyBoundResult> {
    bound(sketchbound::Side::Upper, n, s, k, delta, engine, digits)
}

/// Smallest population count whose right tail reaches `delta`.
#[pyfunction]
#[pyo3(signature = (n, s, k, delta, engine = "auto", digits = None))]
fn lower_bound(
    n: u64,
    s: u64,
    k: u64,
    delta: f64,
    engine: &str,
    digits: Option<u32>,
) -> PyResult<PyBoundResult> {
    bound(sketchbound::Side::Lower, n, s, k, delta, engine, digits)
}

fn tail_ctx(k: u64, digits: Option<u32>) -> PyResult<PrecisionContext> {
    PrecisionContext::for_digits(digits.unwrap_or(30), k).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n, m, s, k, engine = "auto", digits = None))]
fn left_tail(
    n: u64,
    m: u64,
    s: u64,
    k: u64,
    engine: &str,
    digits: Option<u32>,
) -> PyResult<String> {
    let ctx = tail_ctx(k, digits)?;
    let engine = self::engine(engine, n)?;
    let v = sketchbound::left_tail(engine, n, m, s, k, &ctx).map_err(to_py)?;
    Ok(format_real(&v, ctx.digits()))
}

#[pyfunction]
#[pyo3(signature = (n, m, s, k, engine = "auto", digits = None))]
fn right_tail(
    n: u64,
    m: u64,
    s: u64,
    k: u64,
    engine: &str,
    digits: Option<u32>,
) -> PyResult<String> {
    let ctx = tail_ctx(s.saturating_sub(k), digits)?;
    let engine = self::engine(engine, n)?;
    let v = sketchbound::right_tail(engine, n, m, s, k, &ctx).map_err(to_py)?;
    Ok(format_real(&v, ctx.digits()))
}

/// Exact pmf as a `(numerator, denominator)` pair in lowest terms.
#[pyfunction]
fn pmf_exact(n: u64, m: u64, s: u64, j: u64) -> PyResult<(BigInt, BigInt)> {
    let p = sketchbound::pmf_exact(n, m, s, j).map_err(to_py)?;
    Ok((p.numer().clone(), p.denom().clone()))
}

#[pyfunction]
#[pyo3(signature = (n, m, s, k, engine = "auto", digits = None))]
fn gap(n: u64, m: u64, s: u64, k: u64, engine: &str, digits: Option<u32>) -> PyResult<String> {
    let ctx = tail_ctx(k, digits)?;
    let engine = self::engine(engine, n)?;
    let v = sketchbound::gap(n, m, s, k, engine, &ctx).map_err(to_py)?;
    Ok(format_real(&v, ctx.digits()))
}

#[pyfunction]
#[pyo3(signature = (delta, two_sided = false, conditions = 1))]
fn adjust_delta(delta: f64, two_sided: bool, conditions: u32) -> PyResult<f64> {
    let policy = MultiplicityPolicy::new(two_sided, conditions).map_err(to_py)?;
    Ok(sketchbound::adjust_delta(delta, &policy))
}

/// Digit count chosen for a query.
#[pyfunction]
fn choose_precision(n: u64, k: u64, delta: f64) -> u32 {
    sketchbound::choose_precision(n, k, delta).digits()
}

#[pyfunction]
#[pyo3(signature = (n, m, s, delta, trials, seed, engine = "auto", digits = None))]
#[allow(clippy::too_many_arguments)]
fn coverage(
    n: u64,
    m: u64,
    s: u64,
    delta: f64,
    trials: u64,
    seed: u64,
    engine: &str,
    digits: Option<u32>,
) -> PyResult<PyCoverageReport> {
    let spec = CoverageSpec {
        n,
        m,
        s,
        delta,
        trials,
        seed,
    };
    let engine = self::engine(engine, n)?;
    let r = sketchbound::coverage_run(&spec, engine, digits).map_err(to_py)?;
    Ok(PyCoverageReport {
        trials: r.trials,
        upper_failures: r.upper_failures,
        lower_failures: r.lower_failures,
        empirical_upper_rate: r.empirical_upper_rate,
        empirical_lower_rate: r.empirical_lower_rate,
        seed: r.seed,
    })
}

#[pymodule]
#[pyo3(name = "sketchbound")]
fn sketchbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBoundResult>()?;
    m.add_class::<PyCoverageReport>()?;
    m.add(
        "PrecisionInfeasibleError",
        m.py().get_type::<PrecisionInfeasibleError>(),
    )?;
    m.add_function(wrap_pyfunction!(upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(left_tail, m)?)?;
    m.add_function(wrap_pyfunction!(right_tail, m)?)?;
    m.add_function(wrap_pyfunction!(pmf_exact, m)?)?;
    m.add_function(wrap_pyfunction!(gap, m)?)?;
    m.add_function(wrap_pyfunction!(adjust_delta, m)?)?;
    m.add_function(wrap_pyfunction!(choose_precision, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    Ok(())
}
