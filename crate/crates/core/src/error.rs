use thiserror::Error;

use crate::state::{Field, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("grid needs at least 4 cells, got {0}")]
    GridTooSmall(usize),
    #[error("field {field} has length {got}, expected {expected}")]
    ShapeMismatch {
        field: Field,
        got: usize,
        expected: usize,
    },
    #[error("state violates {} invariant(s); first: {}", .0.len(), .0[0])]
    InvalidState(Vec<Violation>),
}

#[derive(Debug, Error, Clone)]
pub enum SchemeError {
    #[error("timestep must be positive and finite, got {0}")]
    BadTimestep(f64),
    #[error("non-finite {field} at index {index}")]
    NonFinite { field: Field, index: usize },
    #[error("positivity lost in {field} at cell {index} (value {value:e})")]
    Positivity {
        field: Field,
        index: usize,
        value: f64,
    },
    #[error("zero pivot in tridiagonal solve at row {row}")]
    ZeroPivot { row: usize },
    #[error("tridiagonal system has inconsistent band lengths (n = {n})")]
    BandShape { n: usize },
    #[error("t_end = {t_end} is not after current time {t}")]
    BadEndTime { t: f64, t_end: f64 },
    #[error("dt halved {retries} times without restoring positivity at t = {}: {cause}", .last_good.t)]
    RetriesExhausted {
        retries: usize,
        cause: Box<SchemeError>,
        last_good: Box<crate::state::SimState>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl SchemeError {
    /// Positivity failures are recoverable by shrinking the step.
    pub fn is_retryable(&self) -> bool {
        matches!(self, SchemeError::Positivity { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("x - ln x = {0} has no real root (minimum of x - ln x is 1)")]
    NoRealRoot(f64),
    #[error("decay fit needs at least 10 samples in the window, got {0}")]
    TooFewSamples(usize),
    #[error("non-positive norm {value:e} at t = {t}; logarithm undefined")]
    NonPositiveNorm { t: f64, value: f64 },
    #[error("degenerate fit window [{lo}, {hi}]")]
    DegenerateWindow { lo: f64, hi: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructionError {
    #[error("volume reconstruction requires unit physical constants")]
    NotNormalized,
    #[error("volume reconstruction requires unit initial mass, got {0}")]
    MassNotUnit(f64),
    #[error("accumulator at t = {acc_t} cannot take a step of {dt} to t = {state_t}")]
    TimeMismatch { acc_t: f64, dt: f64, state_t: f64 },
    #[error("accumulator is at t = {acc_t} but state is at t = {state_t}")]
    Stale { acc_t: f64, state_t: f64 },
    #[error("grid mismatch: {0} vs {1} cells")]
    GridMismatch(usize, usize),
}

#[derive(Debug, Error)]
pub enum InitError {
    #[error("unknown initial-data family {0:?}")]
    UnknownFamily(String),
    #[error("minimum {field} is {min} which is below the floor {floor}")]
    BelowFloor { field: Field, min: f64, floor: f64 },
    #[error("no admissible sample after {0} attempts")]
    RejectionExhausted(usize),
    #[error("kinetic and magnetic energy {energy} leaves no room for positive temperature (excess {excess})")]
    EnergyExcess { energy: f64, excess: f64 },
    #[error("{field} must vanish at the boundary, table gives {value}")]
    BoundaryIncompatible { field: Field, value: f64 },
    #[error("table {path}: {reason}")]
    Table { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}
