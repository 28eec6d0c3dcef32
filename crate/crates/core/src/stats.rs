//! Small descriptive statistics shared by the metric and validation modules.
//!
//! Standard deviations are population (divide-by-N) throughout.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

/// Arithmetic mean, accumulated as deviations from the first element so that
/// a constant vector has exactly its value as mean.
pub fn mean(v: &[f64]) -> f64 {
    let Some(&first) = v.first() else {
        return f64::NAN;
    };
    first + v.iter().map(|x| x - first).sum::<f64>() / v.len() as f64
}

/// Population variance (divides by `n`), two-pass.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

pub fn std_dev(v: &[f64]) -> f64 {
    libm::sqrt(variance(v))
}

/// Ascending average ranks, 1-based. Ties share the mean of the ranks they span.
///
/// NaNs sort last; callers are expected to reject them beforehand.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}
