use thiserror::Error;

/// Failures surfaced by the model, solvers and sweeps.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// An SI-only operation received dimensionless input (or the reverse).
    #[error("unit error: {0}")]
    Units(String),

    /// No steady state exists for the requested dynamics.
    #[error("stability error: {0}")]
    Stability(String),

    /// A numerical routine failed to converge or produced non-finite values.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
