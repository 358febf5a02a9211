use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-convergent quadrature ({detail}): estimate {value:e}, error {error:e}")]
    NonConvergent {
        value: f64,
        error: f64,
        detail: String,
    },
    #[error("non-integrable spectrum: {0}")]
    NonIntegrable(String),
    #[error("sub-vacuum noise: FDT inversion undefined (S/(πJ) = {ratio})")]
    SubVacuum { ratio: f64 },
    #[error("asymptotic regime not reached: {0}")]
    WindowNotReached(String),
    #[error("reconstruction conditions violated: {0}")]
    Symmetry(String),
    #[error("insufficient comb coverage: {0}")]
    InsufficientCoverage(String),
    #[error("phase unresolvable: Φ ≡ 0 (mod π)")]
    PhaseUnresolvable,
    #[error("imaginary residue {residue:e} exceeds 1e-6·|Φ| = {limit:e}")]
    ImaginaryResidue { residue: f64, limit: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Json(_) | Error::Io(_) | Error::Csv(_) => 2,
            Error::WindowNotReached(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
