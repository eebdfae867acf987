use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("model unavailable: {0}")]
    ModelUnavailable(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("duplicate score for image `{image_id}`, method `{method}`")]
    DuplicateScore { image_id: String, method: String },
    #[error("missing score for image `{image_id}`, method `{method}`")]
    MissingScore { image_id: String, method: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no density crossing: {0}")]
    NoCrossing(String),
    #[error("no applicable cut-offs to vote with")]
    NoVoters,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidImage(_) => "InvalidImage",
            Error::InvalidSize(_) => "InvalidSize",
            Error::InvalidParam(_) => "InvalidParam",
            Error::DegenerateSeries(_) => "DegenerateSeries",
            Error::InsufficientSamples(_) => "InsufficientSamples",
            Error::ModelUnavailable(_) => "ModelUnavailable",
            Error::UnknownMethod(_) => "UnknownMethod",
            Error::DuplicateScore { .. } => "DuplicateScore",
            Error::MissingScore { .. } => "MissingScore",
            Error::Parse(_) => "ParseError",
            Error::NoCrossing(_) => "NoCrossing",
            Error::NoVoters => "NoVoters",
            Error::Io { .. } => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
            Error::Image(_) => "Image",
        }
    }
}
