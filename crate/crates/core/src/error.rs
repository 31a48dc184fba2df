use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is numerically rank-deficient (condition number {cond:.3e} > {limit:.0e})")]
    NumericalRank { cond: f64, limit: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("at sweep value {value}: {source}")]
    AtSweepValue {
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by user-supplied configuration rather than by
    /// numerics or I/O.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::Shape(_)
            | Error::Domain(_)
            | Error::Precondition(_)
            | Error::Unknown { .. }
            | Error::Json(_) => true,
            Error::AtSweepValue { source, .. } => source.is_config(),
            Error::NumericalRank { .. } | Error::Io(_) => false,
        }
    }
}
