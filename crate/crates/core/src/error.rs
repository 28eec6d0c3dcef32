use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::metrics::FitnessOutcome;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Matrix axis, used to locate label and marginal problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Country,
    Product,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Country => f.write_str("country"),
            Axis::Product => f.write_str("product"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("duplicate {axis} label `{label}`")]
    DuplicateLabel { axis: Axis, label: String },

    #[error("entry ({row}, {col}) is outside a {rows}x{cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("export value {value} at ({row}, {col}) is negative or not finite")]
    NegativeValue { row: usize, col: usize, value: f64 },

    #[error("{axis} {index} has zero total exports; prune empty rows and columns first")]
    ZeroMarginal { axis: Axis, index: usize },

    #[error("matrix is empty after pruning")]
    EmptyMatrix,

    #[error("matrix has a {axis} with no entries; prune it first")]
    Unpruned { axis: Axis },

    #[error("vector has zero variance or fewer than two elements")]
    DegenerateVector,

    #[error("need at least 3 countries and 3 products, got {countries}x{products}")]
    InsufficientSize { countries: usize, products: usize },

    #[error("country-product graph is disconnected (second eigenvalue {second_eigenvalue})")]
    DisconnectedMatrix { second_eigenvalue: f64 },

    #[error("second and third eigenvalues tie ({second} vs {third}); eigenvector is not unique")]
    DegenerateSpectrum { second: f64, third: f64 },

    #[error("fitness iteration did not converge after {} iterations (last change {change:e})", .last.iterations)]
    NonConvergence { change: f64, last: Box<FitnessOutcome> },

    #[error("fitness iteration fell below the positivity floor at iteration {}", .last.iterations)]
    NumericalUnderflow { last: Box<FitnessOutcome> },

    #[error("exact enumeration needs max_techs <= {limit}, got {max_techs}")]
    InfeasibleEnumeration { max_techs: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("regressors are collinear (condition number {condition:e})")]
    Collinear { condition: f64 },

    #[error("no country labels in common between the matrix and the income panel")]
    JoinEmpty,
}
