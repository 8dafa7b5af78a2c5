use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("joint graph is not a tree: {0}")]
    NotATree(String),
    #[error("part {0} has no rest points")]
    EmptyPart(usize),
    #[error("part {0} has a degenerate rest-state extent")]
    DegeneratePart(usize),
    #[error("joint {index} axis has norm {norm}, outside unit tolerance")]
    NonUnitAxis { index: usize, norm: f64 },
    #[error("invalid joint limits on joint {0}")]
    InvalidLimits(usize),
    #[error("expected {expected} joint states, got {actual}")]
    StateCount { expected: usize, actual: usize },
    #[error("joint {index} state {value} outside limits [{min}, {max}]")]
    StateOutOfLimits {
        index: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("all sampled point triples were collinear")]
    Collinear,
    #[error("non-positive box extent")]
    NonPositiveExtent,
    #[error("placement failure after {0} consecutive rejected samples")]
    PlacementFailure(usize),
    #[error("instance is entirely behind the camera")]
    BehindCamera,
    #[error("instance projects outside the image")]
    OutOfView,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("degenerate correspondence")]
    DegenerateCorrespondence,
    #[error("insufficient support: best hypothesis has {best} inliers, need {needed}")]
    InsufficientSupport { best: usize, needed: usize },
    #[error("part {0} has no assigned points")]
    EmptySelection(usize),
    #[error("ill-conditioned axis for part {0}")]
    IllConditionedAxis(usize),
    #[error("no part could be recovered")]
    NothingRecovered,
    #[error("not a rotation matrix")]
    NotARotation,
    #[error("empty ground-truth set")]
    EmptyGroundTruth,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
