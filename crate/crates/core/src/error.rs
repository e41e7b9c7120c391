use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or malformed model description. `field` names the offending key.
    #[error("invalid model field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("magnetization sector n_up={n_up} out of range for {n_sites} sites")]
    SectorOutOfRange { n_sites: usize, n_up: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("operator is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("operator norm {norm} violates the unit-norm witness requirement")]
    WitnessNorm { norm: f64 },

    #[error("operator does not map sector {source_sector} into a single sector")]
    SectorMismatch { source_sector: usize },

    #[error("eigenstate label {label} out of range (spectrum has {len} states)")]
    LabelOutOfRange { label: usize, len: usize },

    #[error("eigensolver failed in sector n_up={sector}: {message}")]
    Eigensolver { sector: usize, message: String },

    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    Unnormalized { norm_sqr: f64 },

    #[error("invalid mixing coefficients: {0}")]
    Mixing(String),

    #[error("{0}")]
    Undefined(String),

    #[error("system too large for dense reference: {n_sites} sites (limit {limit})")]
    TooLarge { n_sites: usize, limit: usize },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
