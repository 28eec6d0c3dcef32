//! Economic complexity metrics over country–product matrices, plus a
//! combinatorial model of productive knowhow.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs; IO, file formats and the command line live in the
//! `ecomplexity` companion crate.
//!
//! Summation order is always ascending index order, so results are
//! bit-reproducible across runs and platforms with IEEE-754 doubles.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod combinatorics;
mod eigen;
pub mod error;
pub mod knowhow;
pub mod matrix;
pub mod metrics;
pub mod special;
pub mod stats;
pub mod validation;

pub use error::{Axis, Error, Result};
pub use knowhow::{
    estimate_tau, gaussian_binomial_approx, simulate_world, Counting, ModelParams,
    SimulationMode, SophisticationDistribution, SyntheticWorld, TauEstimate,
};
pub use matrix::{binarize, prune_degenerate, rca, rca_binarize, BinaryMatrix, ExportMatrix, RcaMatrix};
pub use metrics::{
    compute_metrics, eci_pci, fitness_complexity, standardize, tdi, tsi, CountryMetrics, EciPci,
    EigenReport, FitnessOptions, FitnessOutcome, MetricSuite, ProductMetrics,
};
pub use validation::{
    fit_exponential, ols, pearson, rank_transform, run_income_regressions, spearman,
    CorrelationMethod, CorrelationResult, ExponentialFit, IncomePanel, RegressionResult,
};
