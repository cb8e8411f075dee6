use thiserror::Error;

use crate::report::ReconstructionReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group element: scale must be positive and finite, got a = {0}")]
    InvalidElement(f64),
    #[error("invalid basis index {0}, expected 1 or 2")]
    InvalidBasisIndex(usize),
    #[error("invalid exponent p = {0}, expected 1 <= p <= inf")]
    InvalidExponent(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("norm of the reference function is zero")]
    ZeroNorm,
    #[error("out-of-box mass fraction {fraction:.3e} exceeds cap {cap:.3e}")]
    OutOfBox { fraction: f64, cap: f64 },
    #[error("sample set does not cover the grid: {uncovered} nodes uncovered")]
    CoveringFailed { uncovered: usize },
    #[error("missing derivative entry for multi-index {0}")]
    MissingDerivative(String),
    #[error("finite-difference step {h} exceeds the allowed maximum {limit}")]
    StepTooLarge { h: f64, limit: f64 },
    #[error("wavelet profile is not admissible: {0}")]
    NonAdmissible(String),
    #[error("signal is not progressive: spectrum has mass on negative frequencies")]
    NonProgressive,
    #[error("multi-index of order {0} is not supported (maximum 2)")]
    OrderTooHigh(usize),
    #[error("suite member {index} is not in the reproducing space: residual {residual:.3e}")]
    NotInReproducingSpace { index: usize, residual: f64 },
    #[error("iteration diverged after {} steps", .0.iterations)]
    Diverged(Box<ReconstructionReport>),
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
