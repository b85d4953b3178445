use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("number of spatial intervals must be even and at least 8, got {0}")]
    InvalidIntervalCount(usize),

    #[error("number of time steps must be at least 2, got {0}")]
    InvalidStepCount(usize),

    #[error("log-transform requires a positive spot, got {0}")]
    NonPositiveSpot(f64),

    #[error("singular tridiagonal system: pivot {pivot:e} at row {row} (row scale {scale:e})")]
    SingularSystem { row: usize, pivot: f64, scale: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "inner iteration did not converge at level {level}: \
         residual {residual:e} after {iterations} iterations"
    )]
    InnerIterationDiverged {
        level: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("grids are not aligned: {0}")]
    MisalignedGrids(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("amplification polynomial has vanishing leading coefficient at theta = {0}")]
    VanishingLeadingCoefficient(f64),
}

pub type Result<T> = std::result::Result<T, PricingError>;
