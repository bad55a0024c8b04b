//! Two-sided Fisher exact test for 2×2 tables.
//!
//! The p-value sums the hypergeometric probabilities of every table with the
//! observed margins whose probability does not exceed the observed table's
//! (the minimum-likelihood convention). Probabilities are built as ratios
//! relative to the modal table, which avoids factorials entirely.

use alloc::vec;

/// Relative slack when comparing a table's probability to the observed one,
/// so tables that tie in exact arithmetic still tie after rounding.
const TIE_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherResult {
    pub p_value: f64,
    /// A row or column margin is zero; every table is the observed one and
    /// the p-value is 1.
    pub degenerate: bool,
}

/// `table = [[a, b], [c, d]]`.
pub fn fisher_exact(table: [[u64; 2]; 2]) -> FisherResult {
    let [[a, b], [c, d]] = table;
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let col2 = b + d;
    if row1 == 0 || row2 == 0 || col1 == 0 || col2 == 0 {
        return FisherResult { p_value: 1.0, degenerate: true };
    }
    let n = row1 + row2;

    // a ranges over [lo, hi] with the margins fixed.
    let lo = col1.saturating_sub(row2);
    let hi = row1.min(col1);
    let mode = (((row1 + 1) as u128 * (col1 + 1) as u128 / (n + 2) as u128) as u64).clamp(lo, hi);

    let len = (hi - lo + 1) as usize;
    let mut weight = vec![0.0f64; len];
    let at = |x: u64| (x - lo) as usize;
    weight[at(mode)] = 1.0;
    // P(x+1)/P(x) = (row1 - x)(col1 - x) / ((x + 1)(row2 - col1 + x + 1))
    for x in mode..hi {
        let num = (row1 - x) as f64 * (col1 - x) as f64;
        let den = (x + 1) as f64 * (row2 + x + 1 - col1) as f64;
        weight[at(x + 1)] = weight[at(x)] * num / den;
    }
    for x in (lo + 1..=mode).rev() {
        let num = x as f64 * (row2 + x - col1) as f64;
        let den = (row1 - x + 1) as f64 * (col1 - x + 1) as f64;
        weight[at(x - 1)] = weight[at(x)] * num / den;
    }

    let observed = weight[at(a)];
    let threshold = observed * (1.0 + TIE_TOLERANCE);
    let mut total = 0.0;
    let mut tail = 0.0;
    // smallest terms first
    let mut left = 0usize;
    let mut right = len - 1;
    loop {
        let idx = if weight[left] <= weight[right] { left } else { right };
        let w = weight[idx];
        total += w;
        if w <= threshold {
            tail += w;
        }
        if left == right {
            break;
        }
        if idx == left {
            left += 1;
        } else {
            right -= 1;
        }
    }
    FisherResult { p_value: (tail / total).min(1.0), degenerate: false }
}
