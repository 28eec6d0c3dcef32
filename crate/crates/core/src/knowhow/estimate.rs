//! Grid-search estimate of `τ` from standardized product sophistication
//! scores (for instance TSI).
//!
//! For each candidate `τ` the world distribution `p(s)` is turned into a
//! continuous distribution by spreading each mass uniformly over
//! `[s - 1/2, s + 1/2]`, standardized with that distribution's own mean and
//! standard deviation, and compared with the empirical CDF of the scores by
//! the Kolmogorov–Smirnov distance.

use alloc::vec::Vec;
use core::cmp::Ordering;

use super::ModelParams;
use crate::error::{Error, Result};
use crate::metrics::standardize;

/// Candidate values `0.001, 0.002, ..., 0.500`, as thousandths.
pub const TAU_GRID: core::ops::RangeInclusive<u32> = 1..=500;

/// Continuity-corrected, standardized world distribution for one `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedModel {
    /// Bin edges in standardized units, `K + 2` of them.
    pub edges: Vec<f64>,
    /// CDF at each edge: 0 at the first, 1 at the last.
    pub cdf: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl StandardizedModel {
    pub fn new(params: &ModelParams) -> Self {
        let dist = params.world_distribution();
        // a unit-width uniform spread adds 1/12 to the variance
        let std = libm::sqrt(dist.std * dist.std + 1.0 / 12.0);
        let k = dist.probabilities.len();
        let mut edges = Vec::with_capacity(k + 1);
        let mut cdf = Vec::with_capacity(k + 1);
        let mut acc = 0.0;
        for s in 0..=k {
            edges.push((s as f64 - 0.5 - dist.mean) / std);
            cdf.push(acc);
            if s < k {
                acc += dist.probabilities[s];
            }
        }
        // absorb rounding so the last edge is exactly 1
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Self { edges, cdf, probabilities: dist.probabilities, mean: dist.mean, std }
    }

    /// Model CDF at standardized value `z`.
    pub fn cdf_at(&self, z: f64) -> f64 {
        let bin = self.edges.partition_point(|&e| e <= z);
        self.interpolate(bin, z)
    }

    // `bin` is the number of edges <= z
    fn interpolate(&self, bin: usize, z: f64) -> f64 {
        if bin == 0 {
            return 0.0;
        }
        if bin >= self.edges.len() {
            return 1.0;
        }
        let (lo, hi) = (self.edges[bin - 1], self.edges[bin]);
        let frac = (z - lo) / (hi - lo);
        self.cdf[bin - 1] + frac * (self.cdf[bin] - self.cdf[bin - 1])
    }

    /// KS distance to the empirical CDF of `sorted`, stopping early once the
    /// distance reaches `bound` (the returned value is then only a lower bound).
    fn ks_bounded(&self, sorted: &[f64], bound: f64) -> f64 {
        let n = sorted.len() as f64;
        let mut bin = 0;
        let mut worst: f64 = 0.0;
        for (i, &z) in sorted.iter().enumerate() {
            while bin < self.edges.len() && self.edges[bin] <= z {
                bin += 1;
            }
            let g = self.interpolate(bin, z);
            worst = worst.max((i + 1) as f64 / n - g).max(g - i as f64 / n);
            if worst >= bound {
                break;
            }
        }
        worst
    }
}

/// Kolmogorov–Smirnov distance between sorted standardized scores and the
/// model at `params`.
pub fn ks_distance(sorted: &[f64], params: &ModelParams) -> f64 {
    StandardizedModel::new(params).ks_bounded(sorted, f64::INFINITY)
}

/// One row of the model-vs-empirical comparison, per sophistication bin.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CdfRow {
    pub s: usize,
    /// Standardized bin centre.
    pub z: f64,
    pub model_pmf: f64,
    /// Model CDF at the bin's upper edge.
    pub model_cdf: f64,
    /// Fraction of scores at or below the bin's upper edge.
    pub empirical_cdf: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TauEstimate {
    pub tau_hat: f64,
    pub ks_distance: f64,
    pub max_techs: usize,
    pub n: usize,
    pub table: Vec<CdfRow>,
}

/// Picks the grid `τ` whose standardized world distribution is closest in
/// KS distance to the scores. The scores are re-standardized first. Ties go
/// to the smaller `τ`.
pub fn estimate_tau(scores: &[f64], max_techs: usize) -> Result<TauEstimate> {
    if max_techs == 0 {
        return Err(Error::InvalidParameter("max_techs must be at least 1"));
    }
    let mut sorted = standardize(scores).map_err(|_| Error::DegenerateInput("scores have zero variance"))?;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));

    let mut best_tau = f64::NAN;
    let mut best = f64::INFINITY;
    for step in TAU_GRID {
        let params = ModelParams::new(step as f64 / 1000.0, max_techs)?;
        let d = StandardizedModel::new(&params).ks_bounded(&sorted, best);
        if d < best {
            best = d;
            best_tau = params.tau();
        }
    }

    let params = ModelParams::new(best_tau, max_techs)?;
    let model = StandardizedModel::new(&params);
    let n = sorted.len();
    let table = (0..model.probabilities.len())
        .map(|s| {
            let upper = model.edges[s + 1];
            CdfRow {
                s,
                z: (s as f64 - model.mean) / model.std,
                model_pmf: model.probabilities[s],
                model_cdf: model.cdf[s + 1],
                empirical_cdf: sorted.partition_point(|&x| x <= upper) as f64 / n as f64,
            }
        })
        .collect();
    Ok(TauEstimate { tau_hat: best_tau, ks_distance: best, max_techs, n, table })
}
