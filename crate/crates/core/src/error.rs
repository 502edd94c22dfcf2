use thiserror::Error;

/// Errors raised anywhere in the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("precision exhausted: results at {low} and {high} digits agree to only {agreed} digits (wanted {target})")]
    PrecisionExhausted {
        target: u32,
        agreed: u32,
        low: u32,
        high: u32,
    },
    #[error("requested order {requested} exceeds the configured maximum {max}")]
    ResourceLimit { requested: usize, max: usize },
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("no stationary or turning point of the truncated energy in [{lo}, {hi}]")]
    NoExtremum { lo: f64, hi: f64 },
    #[error("fit diverged: final rms {final_rms} exceeds starting rms {start_rms}")]
    FitDiverged { start_rms: f64, final_rms: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("division by zero: coefficient at index {index} vanishes")]
    DivisionByZero { index: usize },
    #[error("ratio model has a pole at index {index}")]
    PoleAtIndex { index: usize },
    #[error("reference certifies {available} digits but {needed} are needed")]
    InsufficientPrecision { needed: u32, available: u32 },
    #[error("eigenvalue did not converge up to basis size {max_basis}")]
    NonConvergent { max_basis: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidInput(_) | Error::DomainError(_) | Error::ResourceLimit { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
