use thiserror::Error;

/// Errors raised by the lab's numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("grid size {0} is not a power of two in [16, 4096]")]
    NonPowerOfTwo(usize),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("shape dimension {shape} does not match grid dimension {grid}")]
    DimensionMismatch { shape: usize, grid: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("ill-conditioned fit (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("radius {r} outside the closed-form range of this shape (limit {limit})")]
    OutOfAnalyticRange { r: f64, limit: f64 },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("kernel inadmissible: integrated kernel reaches {min_phi:.3e} at r = {at:.3e}")]
    KernelInadmissible { min_phi: f64, at: f64 },
    #[error("first moment {0:.3e} is not positive")]
    DegenerateMoment(f64),
    #[error("divergent kernel tail: {0}")]
    DivergentTail(String),
    #[error("quadrature routes disagree: {0}")]
    InconsistentQuadrature(String),
    #[error("epsilon {eps} under-resolved on grid with h = {h} (need eps >= 8h)")]
    UnderResolved { eps: f64, h: f64 },
    #[error("kernel truncation cannot reach mass target: {0}")]
    Truncation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("energy bookkeeping drift {rel:.3e} at step {step}")]
    BookkeepingDrift { step: u64, rel: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
