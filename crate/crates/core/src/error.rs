use thiserror::Error;

use crate::ids::ClassId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box ({x_min}, {y_min}, {x_max}, {y_max}): {reason}")]
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        reason: &'static str,
    },

    #[error("IoU threshold {0} is outside [0, 1)")]
    InvalidTau(f64),

    #[error("IoU threshold {0} is outside the evaluation range [0, 0.999]")]
    TauOutOfEvaluationRange(f64),

    #[error("score threshold {0} is outside [0, 1]")]
    InvalidScoreThreshold(f64),

    #[error("detection score {0} is outside [0, 1]")]
    InvalidScore(f64),

    #[error("grid step {0} must divide 1 into a whole number of intervals")]
    InvalidGridStep(f64),

    #[error("matching call mixes classes {0} and {1}")]
    MixedClasses(ClassId, ClassId),

    #[error("cost matrix row {row} has {len} entries, expected {expected}")]
    RaggedCostMatrix {
        row: usize,
        len: usize,
        expected: usize,
    },

    #[error("cost matrix entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },

    #[error("LRP is undefined when the ground-truth and detection sets are both empty")]
    UndefinedLrp,

    #[error(
        "match counts (tp={n_tp}, fp={n_fp}, fn={n_fn}) do not add up to {n_gt} ground truths and {n_det} detections"
    )]
    InconsistentCounts {
        n_tp: usize,
        n_fp: usize,
        n_fn: usize,
        n_gt: usize,
        n_det: usize,
    },

    #[error("invalid DASA parameters: {0}")]
    InvalidDasaParams(String),

    #[error("class {0} has no ground truths; recall is undefined")]
    NoGroundTruth(ClassId),

    #[error("no class has anything to evaluate")]
    NothingEvaluable,

    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),

    #[error("invalid stream: {0}")]
    InvalidStream(String),

    #[error("{location}: {message}")]
    Schema { location: String, message: String },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the content of an input file or argument.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::NothingEvaluable)
    }
}
