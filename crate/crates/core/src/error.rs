use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error(
        "eigensolver did not converge for a {size}x{size} matrix after {iterations} iterations"
    )]
    NoConvergence { size: usize, iterations: usize },

    #[error("Fermi energy {energy} lies within {gap:e} of eigenvalue {eigenvalue}")]
    DegenerateFermiLevel {
        energy: f64,
        eigenvalue: f64,
        gap: f64,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("near-singular rank-one update: |1 + t G(0,0;z)| = {0:e}")]
    NearSingularUpdate(f64),

    #[error("F(t) undefined at t = {t}: {reason}")]
    FUndefined { t: f64, reason: String },

    #[error("no admissible t on the grid: {0}")]
    NoBound(String),

    #[error("ensemble degraded: {failed} of {total} realizations failed (last error: {last})")]
    Degraded {
        failed: usize,
        total: usize,
        last: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors that indicate a numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::DegenerateFermiLevel { .. }
                | Error::Numerical(_)
                | Error::NearSingularUpdate(_)
                | Error::FUndefined { .. }
        )
    }
}
