use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("singular matrix")]
    SingularMatrix,
    #[error("truncation unsafe: |alpha|^2 = {n_alpha:.3} exceeds n_cavity/4 = {bound:.3}")]
    TruncationError { n_alpha: f64, bound: f64 },
    #[error("frame mismatch: Delta_q + n_sb*chi = {residual:.3e} rad/s (expected ~0)")]
    FrameMismatch { residual: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("division by zero in {0}")]
    DivisionByZero(String),
    #[error("integrator step failure: {0}")]
    StepFailure(String),
    #[error("degenerate steady state: null space dimension {0} > 1")]
    DegenerateSteadyState(usize),
    #[error("empty record")]
    EmptyRecord,
    #[error("mixture fit did not converge after {iters} iterations")]
    NonConvergence { iters: usize },
    #[error("degenerate pointer geometry: {0}")]
    DegenerateGeometry(String),
    #[error("collinear centers")]
    CollinearCenters,
    #[error("insufficient jumps: {0} transitions observed")]
    InsufficientJumps(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}
