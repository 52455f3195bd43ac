use thiserror::Error;

/// Errors produced by model validation and dependence computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{field}: non-finite entry at {location}")]
    NonFiniteEntry {
        field: &'static str,
        location: String,
    },

    #[error("cov: matrix is not square ({rows} rows, row {row} has {cols} columns)")]
    NotSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("cov: matrix is not symmetric (relative asymmetry {asymmetry:.3e} at ({i},{j}))")]
    NotSymmetric { i: usize, j: usize, asymmetry: f64 },

    #[error(
        "cov: matrix is not positive definite (smallest pivot {min_pivot:.3e} at index {index})"
    )]
    NotPositiveDefinite { index: usize, min_pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} is too large (maximum {max})")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("dimension {dim} is too small (minimum 2)")]
    DimensionTooSmall { dim: usize },

    #[error("invalid index set: {0}")]
    InvalidSubset(String),

    #[error("invalid support box on axis {axis}: [{lo}, {hi}]")]
    InvalidSupport { axis: usize, lo: f64, hi: f64 },

    #[error("density integrates to {mass} over the support box (tolerance {tol:e})")]
    DensityNotNormalized { mass: f64, tol: f64 },

    #[error("density is negative or non-finite at {point:?}")]
    InvalidDensityValue { point: Vec<f64> },

    #[error("invalid quadrature setting: {0}")]
    InvalidQuadrature(String),

    #[error("conditioning block for variable {target} is singular")]
    SingularConditioningBlock { target: usize },

    #[error("integration did not converge (error estimate {estimate:.3e} > tolerance {tol:.3e})")]
    IntegrationNotConverged { estimate: f64, tol: f64 },

    #[error("variance of variable {axis} is not positive ({variance:e})")]
    NonPositiveVariance { axis: usize, variance: f64 },

    #[error("conditional slice for variable {target} has zero density")]
    ZeroDensitySlice { target: usize },

    #[error("missing mixed moment for index set {0}")]
    MissingRhoTerm(String),

    #[error("density is not positive in the finite-difference stencil around {point:?}")]
    NonPositiveDensityInStencil { point: Vec<f64> },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("evaluation failed at grid node {node}: {source}")]
    GridNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("reference-point solver did not converge in {max_iter} iterations (residual {residual:.3e})")]
    NoConvergence { max_iter: usize, residual: f64 },

    #[error("reference-point Jacobian is singular")]
    SingularJacobian,

    #[error("invalid solver setting: {0}")]
    InvalidSolverSetting(String),
}

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Computation,
    NoConvergence,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonFiniteEntry { .. }
            | Error::NotSquare { .. }
            | Error::NotSymmetric { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::DimensionMismatch { .. }
            | Error::DimensionTooLarge { .. }
            | Error::DimensionTooSmall { .. }
            | Error::InvalidSubset(_)
            | Error::InvalidSupport { .. }
            | Error::DensityNotNormalized { .. }
            | Error::InvalidDensityValue { .. }
            | Error::InvalidQuadrature(_)
            | Error::InvalidGrid(_)
            | Error::InvalidSolverSetting(_) => ErrorClass::Validation,
            Error::NoConvergence { .. } => ErrorClass::NoConvergence,
            Error::GridNode { source, .. } => source.class(),
            _ => ErrorClass::Computation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
