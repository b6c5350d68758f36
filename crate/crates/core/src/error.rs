use thiserror::Error;

/// Errors raised by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("not a shock: endstates coincide")]
    NotAShock,

    #[error("Rankine-Hugoniot condition violated (residual {residual:.3e})")]
    RankineHugoniot { residual: f64 },

    #[error("spectral degeneracy: {0}")]
    SpectralDegeneracy(String),

    #[error("no connecting orbit: {0}")]
    NoConnection(String),

    #[error("consistent splitting fails at lambda = {re:+.6e}{im:+.6e}i: {reason}")]
    Splitting { re: f64, im: f64, reason: String },

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("contour guard tripped: {0}")]
    ContourGuard(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("CFL violation: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("simulation blow-up at t = {t:.4}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("gate refusal: {0}")]
    Gate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("phase tracking failed: {0}")]
    Phase(String),

    #[error("fixed-point iteration did not converge after {0} sweeps")]
    FixedPoint(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
