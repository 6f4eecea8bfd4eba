//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by constructors, solvers and samplers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative and finite, got {value}")]
    NegativeOrNonFinite { name: &'static str, value: f64 },
    #[error("stable index must lie strictly inside (0, 1), got {0}")]
    InvalidStableIndex(f64),
    #[error("material is identically zero")]
    ZeroMaterial,
    #[error("operation requires an analytic representation")]
    NotAnalytic,
    #[error("operation requires an atoms-only representation, but a stable component is present")]
    StablePresent,
    #[error("operation requires a pure stable representation")]
    NotPureStable,
    #[error("bracket [{lo}, {hi}] contains no sign change")]
    BracketWithoutSignChange { lo: f64, hi: f64 },
    #[error("inverse Laplace accelerators disagree at t={t}: talbot={talbot}, gaver-stehfest={gaver}")]
    InversionDivergence { t: f64, talbot: f64, gaver: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("matrix is not symmetric: |A - A^T| exceeds {max_asym:e} at relative tolerance {tol:e}")]
    NotSymmetric { max_asym: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NotPositiveSemidefinite { eigenvalue: f64 },
    #[error("dissipation matrix is not positive definite; use the deflation path")]
    DegeneratePencil,
    #[error("irregular pencil: stiffness and dissipation share a null direction")]
    IrregularPencil,
    #[error("Laplace-domain matrix is singular at theta = {theta}")]
    SingularTransform { theta: f64 },
    #[error("step size {step:e} is below the resolvable floor {floor:e}")]
    StepBelowFloor { step: f64, floor: f64 },
    #[error("observable index {index} out of range for dimension {dim}")]
    ObservableOutOfRange { index: usize, dim: usize },
    #[error("empty observable set")]
    NoObservables,
    #[error("paths lack jump records")]
    MissingJumpRecords,
    #[error("jump point must be nonzero")]
    ZeroJumpPoint,
    #[error("invalid load history: {0}")]
    InvalidLoad(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
