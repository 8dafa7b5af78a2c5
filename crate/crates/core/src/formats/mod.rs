//! On-disk representations: point tables for observations and predictions,
//! JSON documents for scenes and estimates.

mod estimate;
mod scene;
mod table;

pub use estimate::{EstimateDocument, JointEstimateDocument, PartEstimateDocument};
pub use scene::{
    CameraDocument, InstanceDocument, JointDocument, PlaneDocument, PoseDocument, SceneDocument, SimilarityDocument,
};
pub use table::{
    read_observation, read_predictions, write_observation, write_predictions, OBSERVATION_COLUMNS, PREDICTION_COLUMNS,
};
