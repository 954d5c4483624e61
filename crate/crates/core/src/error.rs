use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("band {index} has degenerate weight tr(Pi rho0) = {weight:e}")]
    DegenerateWeight { index: usize, weight: f64 },
    #[error("matrix is singular or too ill-conditioned to invert")]
    Singular,
    #[error("map is not idempotent (defect {defect:e})")]
    NotAProjection { defect: f64 },
    #[error("index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("integration diverged at step {step}")]
    Divergence { step: usize },
    #[error("problem size {size} exceeds the configured cap {cap}")]
    SizeCap { size: usize, cap: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
