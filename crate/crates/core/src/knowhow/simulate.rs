//! Synthetic worlds drawn from the knowhow model.
//!
//! Country `k` holds the nested endowment `{θ_1, ..., θ_k}`. Every tech set
//! gets one world-level coherence coin with success probability `τ^|T|`, so
//! a coherent product is coherent for every country whose endowment
//! contains it. Country `k` makes product `T` exactly when `T ⊆ {θ_1..θ_k}`,
//! which gives `T` a ubiquity of `K + 1 - max(T)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelParams;
use crate::combinatorics::ln_binomial;
use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;

/// Largest `K` accepted by [`SimulationMode::Exact`] (`2^K` tech sets).
pub const EXACT_MAX_TECHS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SimulationMode {
    /// Flip a coherence coin for every subset of `{θ_1..θ_K}`.
    Exact,
    /// Importance-sample `samples` nonempty tech sets.
    ///
    /// The empty set is always coherent and enters once with weight 1. For
    /// the rest, the size `s >= 1` is drawn from `p(s | K)` restricted to
    /// `s >= 1`, and the set uniformly among the `C(K, s)` sets of that size.
    /// Each draw stands for `τ^s C(K, s) / (q(s) · samples)` coherent
    /// products, `q` being the restricted proposal, which makes weighted
    /// counts unbiased for their expectation over worlds.
    MonteCarlo { samples: usize },
}

/// How products enter a world-level sophistication histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Counting {
    /// Each distinct product once.
    Distinct,
    /// Each product once per country making it.
    PerCountry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub params: ModelParams,
    pub mode: SimulationMode,
    pub seed: u64,
    /// Countries `k = 0..=K` by products.
    pub matrix: BinaryMatrix,
    /// Techs of each product, 1-based and ascending.
    pub product_techs: Vec<Vec<u16>>,
    pub product_sophistication: Vec<usize>,
    /// Expected number of coherent products each column stands for; 1 in exact mode.
    pub product_weights: Vec<f64>,
}

impl SyntheticWorld {
    /// Weighted sophistication histogram over the world, normalized to sum to 1.
    pub fn sophistication_histogram(&self, counting: Counting) -> Vec<f64> {
        let mut hist = vec![0.0; self.params.max_techs() + 1];
        for (j, &s) in self.product_sophistication.iter().enumerate() {
            let copies = match counting {
                Counting::Distinct => 1.0,
                Counting::PerCountry => self.matrix.ubiquity()[j] as f64,
            };
            hist[s] += self.product_weights[j] * copies;
        }
        let total: f64 = hist.iter().sum();
        if total > 0.0 {
            hist.iter_mut().for_each(|h| *h /= total);
        }
        hist
    }

    /// Weighted count of country `k`'s products by sophistication, `s = 0..=k`.
    pub fn country_sophistication_counts(&self, k: usize) -> Vec<f64> {
        let mut counts = vec![0.0; k + 1];
        for &j in self.matrix.row(k) {
            counts[self.product_sophistication[j]] += self.product_weights[j];
        }
        counts
    }
}

fn digits(n: usize) -> usize {
    let mut d = 1;
    let mut n = n / 10;
    while n > 0 {
        d += 1;
        n /= 10;
    }
    d
}

fn product_label(techs: &[u16], width: usize) -> String {
    let mut label = String::from("p");
    for (idx, t) in techs.iter().enumerate() {
        if idx > 0 {
            label.push('-');
        }
        label.push_str(&format!("{t:0width$}"));
    }
    label
}

/// Draws a synthetic world. Deterministic for a given `(params, mode, seed)`.
pub fn simulate_world(params: &ModelParams, mode: SimulationMode, seed: u64) -> Result<SyntheticWorld> {
    let big_k = params.max_techs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut products: Vec<(Vec<u16>, f64)> = Vec::new();
    match mode {
        SimulationMode::Exact => {
            if big_k > EXACT_MAX_TECHS {
                return Err(Error::InfeasibleEnumeration { max_techs: big_k, limit: EXACT_MAX_TECHS });
            }
            for mask in 0u32..(1u32 << big_k) {
                let s = mask.count_ones() as usize;
                let coherent = s == 0 || rng.random::<f64>() < params.coherence_prob(s);
                if coherent {
                    let techs = (0..big_k as u16).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect();
                    products.push((techs, 1.0));
                }
            }
        }
        SimulationMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::InvalidParameter("monte carlo needs at least one sample"));
            }
            if big_k > u16::MAX as usize {
                return Err(Error::InvalidParameter("max_techs too large for monte carlo"));
            }
            let mut drawn: BTreeMap<Vec<u16>, f64> = BTreeMap::new();
            drawn.insert(Vec::new(), 1.0);
            if big_k == 0 {
                products = drawn.into_iter().collect();
                return finish(params, mode, seed, products);
            }
            let mut proposal = params.conditional_distribution(big_k)?;
            proposal[0] = 0.0;
            let mut cumulative = Vec::with_capacity(proposal.len());
            let mut acc = 0.0;
            for q in &proposal {
                acc += q;
                cumulative.push(acc);
            }
            proposal.iter_mut().for_each(|q| *q /= acc);
            let ln_tau = libm::log(params.tau());
            for _ in 0..samples {
                let u: f64 = rng.random::<f64>() * acc;
                let s = cumulative.partition_point(|&c| c <= u).clamp(1, big_k);
                let mut techs: Vec<u16> =
                    rand::seq::index::sample(&mut rng, big_k, s).into_iter().map(|t| t as u16 + 1).collect();
                techs.sort_unstable();
                let weight = libm::exp(s as f64 * ln_tau + ln_binomial(big_k as u64, s as u64) - libm::log(proposal[s]))
                    / samples as f64;
                *drawn.entry(techs).or_insert(0.0) += weight;
            }
            products = drawn.into_iter().collect();
        }
    }
    finish(params, mode, seed, products)
}

fn finish(params: &ModelParams, mode: SimulationMode, seed: u64, products: Vec<(Vec<u16>, f64)>) -> Result<SyntheticWorld> {
    let big_k = params.max_techs();
    let width = digits(big_k);
    let country_labels: Vec<String> = (0..=big_k).map(|k| format!("k{k:0width$}")).collect();
    let product_labels: Vec<String> = products.iter().map(|(t, _)| product_label(t, width)).collect();
    let mut entries = Vec::new();
    for (j, (techs, _)) in products.iter().enumerate() {
        let top = techs.last().map_or(0, |&t| t as usize);
        entries.extend((top..=big_k).map(|k| (k, j)));
    }
    let matrix = BinaryMatrix::from_entries(country_labels, product_labels, entries)?;
    let product_sophistication = products.iter().map(|(t, _)| t.len()).collect();
    let product_weights = products.iter().map(|(_, w)| *w).collect();
    let product_techs = products.into_iter().map(|(t, _)| t).collect();
    Ok(SyntheticWorld { params: *params, mode, seed, matrix, product_techs, product_sophistication, product_weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_coherent_when_tau_is_one() {
        let p = ModelParams::new(1.0, 3).unwrap();
        let w = simulate_world(&p, SimulationMode::Exact, 9).unwrap();
        assert_eq!(w.matrix.diversification(), &[1, 2, 4, 8]);
        assert_eq!(w.matrix.n_products(), 8);
    }

    #[test]
    fn exact_rejects_large_k() {
        let p = ModelParams::new(0.1, 21).unwrap();
        assert_eq!(
            simulate_world(&p, SimulationMode::Exact, 0).unwrap_err(),
            Error::InfeasibleEnumeration { max_techs: 21, limit: 20 }
        );
        let p = ModelParams::new(0.1, 5).unwrap();
        assert!(simulate_world(&p, SimulationMode::MonteCarlo { samples: 0 }, 0).is_err());
    }

    #[test]
    fn ubiquity_follows_nesting() {
        for (mode, k) in [(SimulationMode::Exact, 12usize), (SimulationMode::MonteCarlo { samples: 500 }, 60)] {
            let p = ModelParams::new(0.3, k).unwrap();
            let w = simulate_world(&p, mode, 3).unwrap();
            for (j, techs) in w.product_techs.iter().enumerate() {
                let top = techs.last().map_or(0, |&t| t as usize);
                assert_eq!(w.matrix.ubiquity()[j], k + 1 - top);
                assert_eq!(w.product_sophistication[j], techs.len());
                // endowment containment
                for &c in w.matrix.column(j) {
                    assert!(techs.iter().all(|&t| (t as usize) <= c));
                }
            }
            assert!(w.product_techs.windows(2).all(|p| p[0] != p[1]));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = ModelParams::new(0.2, 10).unwrap();
        let a = simulate_world(&p, SimulationMode::Exact, 42).unwrap();
        let b = simulate_world(&p, SimulationMode::Exact, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_world(&p, SimulationMode::Exact, 43).unwrap();
        assert_ne!(a.matrix, c.matrix);
        let mc = SimulationMode::MonteCarlo { samples: 300 };
        assert_eq!(simulate_world(&p, mc, 1).unwrap(), simulate_world(&p, mc, 1).unwrap());
    }

    #[test]
    fn monte_carlo_weights_estimate_world_size() {
        // expected coherent sets over all of {θ_1..θ_K} is (1+τ)^K
        let p = ModelParams::new(0.07, 221).unwrap();
        let w = simulate_world(&p, SimulationMode::MonteCarlo { samples: 4000 }, 8).unwrap();
        let total: f64 = w.product_weights.iter().sum();
        let expect = p.expected_diversification(221).unwrap();
        assert!((total / expect - 1.0).abs() < 1e-9, "{total} vs {expect}");
        // distinct-count histogram estimates p(s | K)
        let hist = w.sophistication_histogram(Counting::Distinct);
        let target = p.conditional_distribution(221).unwrap();
        let tv: f64 = hist.iter().zip(&target).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.05, "tv {tv}");
    }

    #[test]
    fn per_country_histogram_tracks_world_distribution() {
        let p = ModelParams::new(0.3, 12).unwrap();
        let mut pooled = vec![0.0; 13];
        for seed in 0..300 {
            let w = simulate_world(&p, SimulationMode::Exact, seed).unwrap();
            for (j, &s) in w.product_sophistication.iter().enumerate() {
                pooled[s] += w.matrix.ubiquity()[j] as f64;
            }
        }
        let total: f64 = pooled.iter().sum();
        let target = p.world_distribution().probabilities;
        let tv: f64 = pooled.iter().zip(&target).map(|(a, b)| (a / total - b).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.02, "tv {tv}");
    }
}
