use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("matrix is not symplectic (residual {residual:.3e})")]
    NotSymplectic { residual: f64 },
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("spectral error: {0}")]
    Spectral(String),
    #[error("integrator accuracy not reached after {steps} steps (best defect {best_defect:.3e})")]
    Accuracy { steps: usize, best_defect: f64 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("unknown scenario: {0}")]
    UnknownScenario(String),
    #[error("t = {t} is not a crossing instant")]
    NotCrossing { t: f64 },
    #[error("crossing form derivative did not converge at t = {t}")]
    DerivativeNotConverged { t: f64 },
    #[error("degenerate path: {0}")]
    DegeneratePath(String),
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("clustered spectrum: {0}")]
    ClusteredSpectrum(String),
    #[error("FEM index did not stabilize: {0}")]
    FemNotConverged(String),
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
