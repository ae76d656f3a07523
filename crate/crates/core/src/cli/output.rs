use serde_json::{json, Value};

use crate::precision::format_real;
use crate::solver::BoundResult;

/// Integers above 2^53 are not exactly representable as JSON doubles.
const JSON_EXACT_MAX: u64 = 1 << 53;

pub(crate) fn count_json(v: u64) -> Value {
    if v <= JSON_EXACT_MAX {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

/// One computed bound, rendered identically in text and JSON.
pub(crate) struct BoundRow {
    label: Option<String>,
    n: u64,
    s: u64,
    k: u64,
    delta: f64,
    side: &'static str,
    m_hat: u64,
    engine: &'static str,
    digits: u32,
    /// Tail one step beyond the bound (below delta).
    tail_lo: String,
    /// Tail at the bound (at least delta).
    tail_hi: String,
    iterations: u32,
}

impl BoundRow {
    pub(crate) fn new(label: Option<&str>, r: &BoundResult) -> Self {
        BoundRow {
            label: label.map(str::to_owned),
            n: r.instance.n(),
            s: r.instance.s(),
            k: r.instance.k(),
            delta: r.delta_used(),
            side: r.side.name(),
            m_hat: r.m_hat,
            engine: r.engine.name(),
            digits: r.digits,
            tail_lo: format_real(&r.tail_beyond_m_hat, r.digits),
            tail_hi: format_real(&r.tail_at_m_hat, r.digits),
            iterations: r.iterations,
        }
    }

    pub(crate) fn to_json(&self) -> Value {
        let mut v = json!({
            "n": count_json(self.n),
            "s": count_json(self.s),
            "k": count_json(self.k),
            "delta": self.delta,
            "side": self.side,
            "m_hat": count_json(self.m_hat),
            "engine": self.engine,
            "digits": self.digits,
            "tail_lo": self.tail_lo,
            "tail_hi": self.tail_hi,
            "iterations": self.iterations,
        });
        if let Some(label) = &self.label {
            v["label"] = json!(label);
        }
        v
    }

    pub(crate) fn text(&self) -> String {
        let prefix = match &self.label {
            Some(l) => format!("{l} "),
            None => String::new(),
        };
        format!(
            "{prefix}{} m_hat={} k={} delta={} tail_hi={} tail_lo={} engine={} digits={} iterations={}",
            self.side,
            self.m_hat,
            self.k,
            self.delta,
            self.tail_hi,
            self.tail_lo,
            self.engine,
            self.digits,
            self.iterations
        )
    }
}
