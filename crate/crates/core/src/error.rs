use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A monomial violating zero mass or zero momentum, or a malformed key.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("mode {mode} lies outside the state cutoff {cutoff}")]
    ModeOutOfRange { mode: i32, cutoff: usize },

    #[error("nonlinearity data is missing f^({order})(0)")]
    MissingDerivative { order: usize },

    #[error("threshold policy selected a term with zero divisor: {0}")]
    PolicyViolation(String),

    #[error("opening site {site} with xi = 0 is singular")]
    SingularOpening { site: i32 },

    #[error("integration diverged after t = {last_valid_time}")]
    Divergence { last_valid_time: f64 },

    #[error("missing quadratic normal-form data: {0}")]
    MissingQuadraticData(String),

    #[error("unknown projection class `{0}`")]
    UnknownProjection(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
