use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("generation exhausted after {attempts} attempts: {what}")]
    GenerationExhausted { what: String, attempts: u32 },

    #[error("generation failed for image {index} of split {split}: {source}")]
    ImageGeneration {
        split: String,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("placement exhausted after {attempts} attempts")]
    PlacementExhausted { attempts: u32 },

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("segmentation ambiguous: {0}")]
    SegmentationAmbiguous(String),

    #[error("inconsistent scene: {0}")]
    InconsistentScene(String),

    #[error("corrupt dataset at record {image_id}: {reason}")]
    CorruptDataset { image_id: String, reason: String },

    #[error("missing prediction for image {0}")]
    MissingPrediction(String),

    #[error("duplicate prediction for image {0}")]
    DuplicatePrediction(String),

    #[error("prediction references unknown image {0}")]
    UnknownImage(String),

    #[error("at least two seeds are required, got {0}")]
    InsufficientSeeds(usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("image decode failed: {0}")]
    Decode(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 3,
            Error::GenerationExhausted { .. }
            | Error::ImageGeneration { .. }
            | Error::PlacementExhausted { .. }
            | Error::DegenerateShape(_)
            | Error::InvalidParams(_) => 4,
            Error::CorruptDataset { .. } | Error::Decode(_) => 5,
            Error::SegmentationAmbiguous(_) | Error::InconsistentScene(_) => 6,
            Error::MissingPrediction(_)
            | Error::DuplicatePrediction(_)
            | Error::UnknownImage(_)
            | Error::InsufficientSeeds(_) => 7,
            Error::DegenerateInput(_) => 8,
        }
    }
}
