use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vectors are linearly dependent (residual norm {residual:.3e})")]
    RankDeficient { residual: f64 },
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("rotation pair is not orthonormal (defect {defect:.3e})")]
    NotOrthonormalPair { defect: f64 },
    #[error("operator is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("operator is not an orthogonal projection (defect {defect:.3e})")]
    NotProjection { defect: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("flag is not decreasing at member {index} (defect {defect:.3e})")]
    OrderingViolation { index: usize, defect: f64 },
    #[error("flag member {index} drops rank by {found}, expected {expected}")]
    RankDropMismatch { index: usize, expected: usize, found: usize },
    #[error("no exponent within the cap satisfies level {level}")]
    Infeasible { level: usize },
    #[error("flag has {available} unit-drop stages, at least {required} are needed")]
    InsufficientStages { available: usize, required: usize },
    #[error("plan needs {required} dimensions, cap is {cap}")]
    BudgetExceeded { required: usize, cap: usize },
    #[error("{needed} helper vectors are needed, {available} were supplied")]
    MissingHelpers { needed: usize, available: usize },
    #[error("value {value:.3e} leaves the representable range ({context})")]
    NumericalRange { context: &'static str, value: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
