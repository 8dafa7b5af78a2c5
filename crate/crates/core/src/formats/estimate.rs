use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Similarity, Vec3};
use crate::kinematics::JointType;
use crate::scenegen::BBox2d;
use crate::solver::{InstanceEstimate, JointEstimate};

use super::scene::SimilarityDocument;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartEstimateDocument {
    pub part: usize,
    #[serde(flatten)]
    pub pose: SimilarityDocument,
    pub inlier_count: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointEstimateDocument {
    pub part: usize,
    #[serde(rename = "type")]
    pub joint_type: JointType,
    pub axis: [f64; 3],
    pub location: [f64; 3],
    pub confidence: f64,
}

/// Solver output for one observed instance. Absent parts are omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateDocument {
    pub num_parts: usize,
    /// Image box of the points segmented as foreground; `None` when no
    /// point was.
    pub bbox2d: Option<[f64; 4]>,
    pub parts: Vec<PartEstimateDocument>,
    pub joints: Vec<JointEstimateDocument>,
    pub flags: Vec<String>,
}

impl EstimateDocument {
    pub fn from_estimate(est: &InstanceEstimate, bbox2d: Option<&BBox2d>) -> Self {
        let parts = est
            .part_poses
            .iter()
            .enumerate()
            .filter_map(|(slot, pose)| {
                pose.as_ref().map(|p| PartEstimateDocument {
                    part: slot + 1,
                    pose: SimilarityDocument::from_similarity(p),
                    inlier_count: est.inlier_count(slot + 1),
                    residual: est.residuals[slot].unwrap_or(0.0),
                })
            })
            .collect();
        let joints = est
            .joints
            .iter()
            .enumerate()
            .filter_map(|(slot, j)| {
                j.as_ref().map(|j| JointEstimateDocument {
                    part: slot + 1,
                    joint_type: j.joint_type,
                    axis: [j.axis.x, j.axis.y, j.axis.z],
                    location: [j.location.x, j.location.y, j.location.z],
                    confidence: j.confidence,
                })
            })
            .collect();
        Self {
            num_parts: est.num_parts(),
            bbox2d: bbox2d.map(|b| [b.u1, b.v1, b.u2, b.v2]),
            parts,
            joints,
            flags: est.flags.iter().map(ToString::to_string).collect(),
        }
    }

    /// Pose per part slot.
    pub fn part_poses(&self) -> Result<Vec<Option<Similarity>>> {
        let mut out = vec![None; self.num_parts];
        for p in &self.parts {
            let slot = p
                .part
                .checked_sub(1)
                .filter(|&s| s < self.num_parts)
                .ok_or_else(|| Error::Malformed(format!("part index {} out of range", p.part)))?;
            out[slot] = Some(p.pose.to_similarity()?);
        }
        Ok(out)
    }

    pub fn joint_estimates(&self) -> Vec<Option<JointEstimate>> {
        let mut out = vec![None; self.num_parts];
        for j in &self.joints {
            if let Some(slot) = j.part.checked_sub(1).filter(|&s| s < self.num_parts) {
                out[slot] = Some(JointEstimate {
                    joint_type: j.joint_type,
                    axis: Vec3::from(j.axis),
                    location: Vec3::from(j.location),
                    confidence: j.confidence,
                });
            }
        }
        out
    }

    pub fn bbox(&self) -> Option<BBox2d> {
        self.bbox2d.map(|[u1, v1, u2, v2]| BBox2d { u1, v1, u2, v2 })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))
    }
}
