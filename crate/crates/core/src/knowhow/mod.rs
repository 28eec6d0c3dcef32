//! Combinatorial model of productive knowhow.
//!
//! A product is a raw material plus a set of `s` techs; a set of `s` techs is
//! coherent with probability `τ^s`. A country holding `k` techs then makes
//! `(1+τ)^k` products on average, with sophistication distributed as
//! `C(k,s) τ^s / (1+τ)^k`. Countries `k = 0..=K` together give the world
//! distribution `p(s) ∝ τ^(s+1) C(K+1, s+1)`.

mod estimate;
mod simulate;

pub use estimate::{estimate_tau, ks_distance, CdfRow, StandardizedModel, TauEstimate, TAU_GRID};
pub use simulate::{simulate_world, Counting, SimulationMode, SyntheticWorld, EXACT_MAX_TECHS};

use alloc::vec::Vec;

use crate::combinatorics::ln_binomial;
use crate::error::{Error, Result};

/// Model parameters: coherence probability per tech and the largest tech
/// count `K` among countries.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    tau: f64,
    max_techs: usize,
}

impl ModelParams {
    /// `tau` must lie in `(0, 1]`. `τ = 1` is the degenerate case where every
    /// tech set is coherent.
    pub fn new(tau: f64, max_techs: usize) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidParameter("tau must lie in (0, 1]"));
        }
        Ok(Self { tau, max_techs })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn max_techs(&self) -> usize {
        self.max_techs
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.max_techs {
            return Err(Error::InvalidParameter("tech count exceeds max_techs"));
        }
        Ok(())
    }

    /// Probability `τ^s` that a set of `s` techs is coherent.
    pub fn coherence_prob(&self, s: usize) -> f64 {
        libm::pow(self.tau, s as f64)
    }

    /// Expected number of products of a country with `k` techs, `(1+τ)^k`.
    pub fn expected_diversification(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        Ok(libm::exp(k as f64 * libm::log1p(self.tau)))
    }

    /// `p(s | k)` for `s = 0..=k`.
    pub fn conditional_distribution(&self, k: usize) -> Result<Vec<f64>> {
        self.check_k(k)?;
        let ln_tau = libm::log(self.tau);
        let ln_norm = k as f64 * libm::log1p(self.tau);
        Ok((0..=k)
            .map(|s| libm::exp(ln_binomial(k as u64, s as u64) + s as f64 * ln_tau - ln_norm))
            .collect())
    }

    /// `E(s | k) = τ k / (1 + τ)`.
    pub fn expected_sophistication(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        Ok(self.tau * k as f64 / (1.0 + self.tau))
    }

    /// Sophistication distribution over all products made worldwide by
    /// countries `k = 0..=K`, counting a product once per country making it.
    ///
    /// `p(s) = C τ^(s+1) C(K+1, s+1)` with `C = 1 / ((1+τ)^(K+1) - 1)`,
    /// evaluated in log space.
    pub fn world_distribution(&self) -> SophisticationDistribution {
        let big_k = self.max_techs as u64;
        let ln_tau = libm::log(self.tau);
        let ln_c = -libm::log(libm::expm1((big_k + 1) as f64 * libm::log1p(self.tau)));
        let probabilities: Vec<f64> = (0..=big_k)
            .map(|s| libm::exp(ln_c + (s + 1) as f64 * ln_tau + ln_binomial(big_k + 1, s + 1)))
            .collect();
        SophisticationDistribution::from_probabilities(probabilities)
    }
}

/// A probability vector over sophistication `s = 0..=K` with its moments.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SophisticationDistribution {
    pub probabilities: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl SophisticationDistribution {
    pub fn from_probabilities(probabilities: Vec<f64>) -> Self {
        let mean: f64 = probabilities.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
        let var: f64 = probabilities.iter().enumerate().map(|(s, p)| (s as f64 - mean) * (s as f64 - mean) * p).sum();
        Self { probabilities, mean, std: libm::sqrt(var) }
    }

    /// Most likely sophistication; the smallest one on ties.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (s, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = s;
            }
        }
        best
    }
}

/// Normal approximation of `C(n, x)`:
/// `2^n / sqrt(π n / 2) · exp(-(x - n/2)² / (n/2))`.
///
/// Accurate near the centre for large `n`, poor in the tails.
pub fn gaussian_binomial_approx(n: u64, x: u64) -> f64 {
    libm::exp(ln_gaussian_binomial_approx(n, x))
}

/// Natural log of [`gaussian_binomial_approx`]; usable where `2^n` overflows.
pub fn ln_gaussian_binomial_approx(n: u64, x: u64) -> f64 {
    let n = n as f64;
    let half = n / 2.0;
    let dev = x as f64 - half;
    n * core::f64::consts::LN_2 - 0.5 * libm::log(core::f64::consts::PI * half) - dev * dev / half
}
