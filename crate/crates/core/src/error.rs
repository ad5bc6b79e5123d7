use thiserror::Error;

/// Errors raised by the solvers, operators and experiment pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains non-finite samples")]
    NonFinite,

    #[error("spectrum violates Hermitian symmetry (max defect {defect:e})")]
    NonHermitianSpectrum { defect: f64 },

    #[error("dispersive order {0} outside [0, 2]")]
    InvalidOrder(f64),

    #[error("operands live on different grids ({left} vs {right} points)")]
    GridMismatch { left: usize, right: usize },

    #[error("map is not an orientation-preserving diffeomorphism (min jacobian {min_jacobian:e})")]
    NotDiffeomorphism { min_jacobian: f64 },

    #[error("symbol has no continuous evaluator; it cannot be evaluated off the grid")]
    SymbolNotContinuous,

    #[error("gradient blow-up suspected at t = {t}: sup|u_x| grew by a factor {growth:.1}")]
    ShockSuspected { t: f64, growth: f64 },

    #[error("time step produced non-finite coefficients at t = {t}")]
    StepUnstable { t: f64 },

    #[error("ellipticity violated: min |gamma|/|k|^order = {measured:e} below floor {floor:e}")]
    EllipticityViolated { measured: f64, floor: f64 },

    #[error("time {t} outside the trajectory range [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("flow map degenerated (min jacobian {min_jacobian:e})")]
    FlowDegenerate { min_jacobian: f64 },

    #[error("cannot form a norm ratio against a zero field")]
    ZeroField,

    #[error("grid of {n_points} points under-resolves lambda = {lambda} (need at least {required})")]
    UnderResolved { n_points: usize, lambda: f64, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency must be non-zero")]
    ZeroFrequency,

    #[error("Taylor sign condition violated: min a = {min_a:e}")]
    TaylorSignViolation { min_a: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
