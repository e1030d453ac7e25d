use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum FrechetError {
    /// An ambient point does not satisfy the surface equation.
    #[error("point is off the {space} surface: residual {residual:.3e} exceeds {tol:.1e}")]
    OffManifold {
        space: &'static str,
        residual: f64,
        tol: f64,
    },

    /// A vector supplied as tangent has a normal component.
    #[error("vector is not tangent at the base point: |<t, n>| = {dot:.3e}")]
    NotTangent { dot: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The local-linear moment matrix is singular at this evaluation point:
    /// fewer than two distinct predictors carry kernel mass.
    #[error("degenerate smoothing window at x0 = {x0}: sigma0_sq = {sigma0_sq:.3e} (bandwidth too small)")]
    DegenerateWindow { x0: f64, sigma0_sq: f64 },

    /// No sample point carries kernel mass at this evaluation point.
    #[error("empty smoothing window at x0 = {x0}")]
    EmptyWindow { x0: f64 },

    /// A numerical procedure failed to reach its target accuracy.
    #[error("numeric failure in {context}: {message}")]
    Numeric {
        context: &'static str,
        message: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, FrechetError>;
