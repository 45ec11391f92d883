use thiserror::Error;

use crate::evolution::BreakdownReport;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatenoidError {
    #[error("invalid dimension n = {0} (need n >= 2)")]
    InvalidDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("integral diverges for n = {0}")]
    DivergentIntegral(usize),
    #[error("boost speed |l| = {0} is not below 1")]
    SuperluminalBoost(f64),
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("fit window lies below the noise floor: {0}")]
    FitWindowTooFar(String),
    #[error("grid mismatch: {0}")]
    GridError(String),
    #[error("cutoff radius too small: retained fraction {retained} of the eigenfunction norm")]
    TruncationLoss { retained: f64 },
    #[error("insufficient history at t = {0}")]
    HistoryError(f64),
    #[error("modulation matrix is singular")]
    ModulationSingular,
    #[error("non-finite value at step {step}")]
    NumericalBlowup { step: usize },
    #[error("induced metric lost Lorentzian signature: {0:?}")]
    Breakdown(BreakdownReport),
    #[error("data support violates |rho| < {limit}")]
    SupportError { limit: f64 },
    #[error("no bracket for the leaf time: {0}")]
    NoBracket(String),
    #[error("bracket endpoints give the same exit sign ({0})")]
    BadBracket(i8),
    #[error("run budget of {0} candidates exhausted")]
    BudgetExhausted(usize),
    #[error("fit failed: {0}")]
    FitError(String),
}

pub type Result<T> = std::result::Result<T, CatenoidError>;
