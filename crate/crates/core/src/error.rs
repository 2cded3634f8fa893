use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step size underflow at t = {t} (possible blow-up)")]
    StepUnderflow { t: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("integrator exceeded {max_steps} steps at t = {t}")]
    TooManySteps { max_steps: usize, t: f64 },

    #[error("energy drift {drift:e} exceeds bound {bound:e}")]
    EnergyDrift { drift: f64, bound: f64 },

    #[error("degenerate covector: H = {h:e} (outside the elliptic cone)")]
    DegenerateCovector { h: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian")]
    SingularJacobian,

    #[error("degenerate critical point: {0}")]
    DegenerateCriticalPoint(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("unresolved kernel: refinement delta {delta:.4} exceeds {limit}")]
    UnresolvedKernel { delta: f64, limit: f64 },

    #[error("problem size {size} exceeds limit {limit}")]
    SizeExceeded { size: usize, limit: usize },

    #[error("value {value} outside multiplier grid [{lo}, {hi}]")]
    OutsideGrid { value: f64, lo: f64, hi: f64 },

    #[error("fit rejected: {0}")]
    PoorFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model file: {0}")]
    ModelFile(#[from] toml::de::Error),
}
