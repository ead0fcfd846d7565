use thiserror::Error;

/// Errors raised by the workbench.
///
/// Variants fall in two groups: contract violations on the inputs
/// (`Invalid*`, `OutOfRange`, ...) and numerical failures
/// (`NonConvergence`, `Overflow`). The CLI maps the first group to exit
/// code 2 and the second to exit code 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cube [{start}, {start}+{len}) does not fit in a grid of {cells} cells")]
    CubeOutOfRange { start: usize, len: usize, cells: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },
    #[error("floating overflow while evaluating {0}; rescale the input")]
    Overflow(&'static str),
}

impl Error {
    /// True for failures of a numerical iteration, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Overflow(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
