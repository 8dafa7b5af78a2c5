//! Pose and joint recovery from per-point predictions: robust similarity
//! alignment per part, aggregation of the joint heads, and a refinement of
//! all parts under the kinematic constraints of the model.

mod instance;
mod joints;
mod ransac;
mod refine;
mod umeyama;

pub use crate::geometry::Similarity;
pub use instance::{solve_instance, EstimateFlag, InstanceEstimate, SolverConfig};
pub use joints::{aggregate_joint_axis, classify_joint_type, point_line_distance, vote_joint_location, JointEstimate};
pub use ransac::{ransac_pose, RansacConfig};
pub use refine::{
    constrained_refine, KinematicEdge, PartCorrespondence, RefineConfig, RefineReport, RefineStatus, RestJoint,
};
pub use umeyama::{residual_rms, umeyama};
