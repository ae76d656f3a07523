//! Batch query files.
//!
//! ```text
//! # population, sample size, overall delta
//! 1000000 5000 0.10
//! red   1450
//! green 212
//! ```
//!
//! Blank lines and anything after `#` are ignored. Labels must be unique.

use std::collections::BTreeMap;

use super::parse_count;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchCondition {
    pub label: String,
    pub k: u64,
}

/// Parsed batch file; conditions are sorted by label.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchQueryFile {
    pub n: u64,
    pub s: u64,
    pub delta: f64,
    pub conditions: Vec<BatchCondition>,
}

/// Parses a batch file. Errors name the offending line.
pub fn parse_batch(text: &str) -> Result<BatchQueryFile, String> {
    let mut header: Option<(u64, u64, f64)> = None;
    let mut conditions: BTreeMap<String, (u64, usize)> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: String| format!("line {line_no}: {msg}");

        let Some((_, s, _)) = header else {
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected header 'n s delta', found {} fields",
                    fields.len()
                )));
            }
            let n = parse_count(fields[0]).map_err(err)?;
            let s = parse_count(fields[1]).map_err(err)?;
            let delta: f64 = fields[2]
                .parse()
                .map_err(|_| err(format!("'{}' is not a number", fields[2])))?;
            if n < 1 || s < 1 || s > n {
                return Err(err(format!("need 1 <= s <= n, got n = {n}, s = {s}")));
            }
            if !(delta > 0.0 && delta < 1.0) {
                return Err(err(format!("delta must lie in (0, 1), got {delta}")));
            }
            header = Some((n, s, delta));
            continue;
        };

        if fields.len() != 2 {
            return Err(err(format!(
                "expected 'label k', found {} fields",
                fields.len()
            )));
        }
        let k = parse_count(fields[1]).map_err(err)?;
        if k > s {
            return Err(err(format!("k = {k} exceeds the sample size {s}")));
        }
        if let Some((_, first)) = conditions.get(fields[0]) {
            return Err(err(format!(
                "duplicate label '{}' (first on line {first})",
                fields[0]
            )));
        }
        conditions.insert(fields[0].to_owned(), (k, line_no));
    }

    let (n, s, delta) = header.ok_or_else(|| "missing header line 'n s delta'".to_owned())?;
    if conditions.is_empty() {
        return Err("no conditions after the header".to_owned());
    }
    Ok(BatchQueryFile {
        n,
        s,
        delta,
        conditions: conditions
            .into_iter()
            .map(|(label, (k, _))| BatchCondition { label, k })
            .collect(),
    })
}
