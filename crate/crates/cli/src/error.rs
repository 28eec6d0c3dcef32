use std::io;
use std::path::PathBuf;

use ecomplexity_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes, one per error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const PARSE: i32 = 4;
    pub const NEGATIVE_VALUE: i32 = 5;
    pub const DEGENERATE: i32 = 6;
    pub const NON_CONVERGENCE: i32 = 7;
    pub const JOIN_EMPTY: i32 = 8;
    pub const EIGEN: i32 = 9;
    pub const EMPTY_MATRIX: i32 = 10;
    pub const INFEASIBLE: i32 = 11;
    pub const COLLINEAR: i32 = 12;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{}:{line}: negative export value {value}", path.display())]
    NegativeValue { path: PathBuf, line: u64, value: f64 },

    #[error(transparent)]
    Core(#[from] CoreError),

    /// Some metric families failed; their outputs were still written where possible.
    #[error("{} metric famil{} failed: {}", .0.len(), if .0.len() == 1 { "y" } else { "ies" }, summarize(.0))]
    Partial(Vec<(String, CoreError)>),
}

fn summarize(failures: &[(String, CoreError)]) -> String {
    failures.iter().map(|(name, e)| format!("{name}: {e}")).collect::<Vec<_>>().join("; ")
}

pub fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::NegativeValue { .. } => exit::NEGATIVE_VALUE,
        CoreError::DegenerateVector | CoreError::DegenerateInput(_) | CoreError::InsufficientSize { .. } => {
            exit::DEGENERATE
        }
        CoreError::NonConvergence { .. } | CoreError::NumericalUnderflow { .. } => exit::NON_CONVERGENCE,
        CoreError::JoinEmpty => exit::JOIN_EMPTY,
        CoreError::DisconnectedMatrix { .. } | CoreError::DegenerateSpectrum { .. } => exit::EIGEN,
        CoreError::EmptyMatrix | CoreError::ZeroMarginal { .. } | CoreError::Unpruned { .. } => exit::EMPTY_MATRIX,
        CoreError::InfeasibleEnumeration { .. } => exit::INFEASIBLE,
        CoreError::Collinear { .. } => exit::COLLINEAR,
        CoreError::InvalidParameter(_) => exit::USAGE,
        _ => exit::OTHER,
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } => exit::IO,
            CliError::Parse { .. } => exit::PARSE,
            CliError::NegativeValue { .. } => exit::NEGATIVE_VALUE,
            CliError::Core(e) => core_exit_code(e),
            // the first failing family decides
            CliError::Partial(failures) => failures.first().map_or(exit::OTHER, |(_, e)| core_exit_code(e)),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
