use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("point ({x:.6}, {y:.6}) is outside the tubular neighborhood: {reason}")]
    OutOfTube { x: f64, y: f64, reason: String },

    #[error(
        "metric projection of ({x:.6}, {y:.6}) is not unique (candidates t = {t1:.6}, t = {t2:.6})"
    )]
    NonUniqueProjection { x: f64, y: f64, t1: f64, t2: f64 },

    #[error("focal crossing: 1 + d·k = {value:.3e} at distance {distance:.6} (curvature {curvature:.6})")]
    Focal {
        distance: f64,
        curvature: f64,
        value: f64,
    },

    /// A geometric admissibility guard failed (`ε·max h < d₀`, positivity of `h`, ...).
    #[error("geometry guard violated: {0}")]
    Guard(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh quality: {0}")]
    MeshQuality(String),

    #[error("mesh/geometry mismatch: {0}")]
    Mismatch(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("linear solve did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    Solver { residual: f64, iterations: usize },

    #[error("optimizer: {0}")]
    Optimizer(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors raised by the geometric admissibility checks.
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::Guard(_) | Error::Focal { .. })
    }
}
