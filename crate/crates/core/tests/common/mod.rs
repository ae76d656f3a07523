//! Integer oracle for small populations, independent of the crate's
//! rational arithmetic. Binomials up to n = 120 fit in u128.

#![allow(dead_code)]

use std::io::Write;

pub struct Pascal {
    rows: Vec<Vec<u128>>,
}

impl Pascal {
    pub fn new(max_n: usize) -> Self {
        assert!(max_n <= 120);
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = vec![1u128; n + 1];
            for j in 1..n {
                row[j] = rows[n - 1][j - 1] + rows[n - 1][j];
            }
            rows.push(row);
        }
        Pascal { rows }
    }

    /// C(n, j), zero outside 0..=n.
    pub fn c(&self, n: u64, j: i64) -> u128 {
        if j < 0 || j as u64 > n {
            0
        } else {
            self.rows[n as usize][j as usize]
        }
    }

    /// C(m, j) C(n - m, s - j): the pmf numerator over C(n, s).
    pub fn term(&self, n: u64, m: u64, s: u64, j: u64) -> u128 {
        self.c(m, j as i64) * self.c(n - m, s as i64 - j as i64)
    }

    /// Left-tail numerators `N(m) = sum_{j <= k} term(j)` for m = 0..=n.
    pub fn left_numerators(&self, n: u64, s: u64, k: u64) -> Vec<u128> {
        (0..=n)
            .map(|m| (0..=k).map(|j| self.term(n, m, s, j)).sum())
            .collect()
    }

    /// Right-tail numerators `sum_{j >= k} term(j)` for m = 0..=n.
    pub fn right_numerators(&self, n: u64, s: u64, k: u64) -> Vec<u128> {
        (0..=n)
            .map(|m| (k..=s).map(|j| self.term(n, m, s, j)).sum())
            .collect()
    }
}

/// A finite positive f64 as `mant * 2^-shift`.
#[derive(Debug, Clone, Copy)]
pub struct Dyadic {
    pub mant: u128,
    pub shift: u32,
}

impl Dyadic {
    pub fn from_f64(x: f64) -> Self {
        assert!(x > 0.0 && x < 1.0);
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mut mant, mut e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        while mant % 2 == 0 {
            mant /= 2;
            e += 1;
        }
        assert!(e < 0);
        Dyadic {
            mant: mant as u128,
            shift: (-e) as u32,
        }
    }

    /// Signed `num / den - self`, scaled by `den * 2^shift`.
    pub fn diff_scaled(&self, num: u128, den: u128) -> i128 {
        (num << self.shift) as i128 - (self.mant * den) as i128
    }

    /// `num / den >= self`.
    pub fn le_ratio(&self, num: u128, den: u128) -> bool {
        self.diff_scaled(num, den) >= 0
    }

    /// `num / den - self` as a double.
    pub fn diff_f64(&self, num: u128, den: u128) -> f64 {
        self.diff_scaled(num, den) as f64 / (den as f64 * 2f64.powi(self.shift as i32))
    }
}

/// `max{m : L(m) >= delta}` from left numerators.
pub fn upper_from(numer: &[u128], total: u128, delta: &Dyadic) -> u64 {
    numer
        .iter()
        .rposition(|&v| delta.le_ratio(v, total))
        .expect("L(0) = 1") as u64
}

/// `min{m : R(m) >= delta}` from right numerators.
pub fn lower_from(numer: &[u128], total: u128, delta: &Dyadic) -> u64 {
    numer
        .iter()
        .position(|&v| delta.le_ratio(v, total))
        .expect("R(n) = 1") as u64
}

/// Prints one result line past the test harness's output capture.
pub fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{verdict} {criterion}: {detail}");
    let _ = out.flush();
}

/// `ceil(log2(n))` for n >= 1.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}
