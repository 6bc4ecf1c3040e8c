use thiserror::Error;

/// Failures surfaced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlalomError {
    #[error("invalid field parameters: {0}")]
    InvalidField(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("saddle-point Newton iteration did not reach residual {tol:e} in {iterations} steps (residual {residual:e})")]
    SaddleNotConverged {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("soft-recollision solver for n={n} did not converge in {iterations} iterations")]
    RecollisionNotConverged { n: u32, iterations: usize },

    #[error("branch-cut tracing step underflow at t={re:.6}{im:+.6}i")]
    StepUnderflow { re: f64, im: f64 },

    #[error("root tracking failed at loop step {step}: displacement exceeds root spacing")]
    TrackingFailed { step: usize },

    #[error("contour crosses a branch cut on segment {segment}")]
    CutCrossing { segment: usize },

    #[error("contour vertex t={re:.6}{im:+.6}i sits on a collision point (r = 0)")]
    CollisionPoint { re: f64, im: f64 },

    #[error("quadrature did not converge on segment {segment} (error estimate {estimate:e})")]
    QuadratureNotConverged { segment: usize, estimate: f64 },
}

pub type Result<T> = std::result::Result<T, SlalomError>;
