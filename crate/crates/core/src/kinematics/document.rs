//! JSON model documents.
//!
//! ```json
//! {
//!   "category": "laptop",
//!   "parts": [{"name": "base", "rest_points": [[0.0, 0.0, 0.0], ...]}, ...],
//!   "joints": [{"type": "revolute", "axis": [1, 0, 0], "pivot": [0, 0.1, 0.02],
//!               "limits": [0.0, 2.0], "parent": 1, "child": 2}],
//!   "root": 1
//! }
//! ```
//!
//! Part references are 1-based. `id` and `nocs_frames` are optional.

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{from_row_major, is_rotation, row_major, Vec3};

use super::{ArticulatedModel, JointLimits, JointSpec, JointType, NocsFrame, Part};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub category: String,
    pub parts: Vec<PartDocument>,
    #[serde(default)]
    pub joints: Vec<JointDocument>,
    #[serde(default = "default_root")]
    pub root: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nocs_frames: Option<Vec<FrameDocument>>,
}

fn default_root() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartDocument {
    pub name: String,
    pub rest_points: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointDocument {
    #[serde(rename = "type")]
    pub joint_type: JointType,
    pub axis: [f64; 3],
    pub pivot: [f64; 3],
    pub limits: [f64; 2],
    pub parent: usize,
    pub child: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameDocument {
    pub center: [f64; 3],
    pub scale: f64,
    /// Row-major 3×3.
    pub basis: [f64; 9],
}

impl ModelDocument {
    pub fn from_model(model: &ArticulatedModel) -> Self {
        Self {
            id: Some(model.id().to_string()),
            category: model.category().to_string(),
            parts: model
                .parts()
                .iter()
                .map(|p| PartDocument {
                    name: p.name.clone(),
                    rest_points: p.rest_points.iter().map(|v| [v.x, v.y, v.z]).collect(),
                })
                .collect(),
            joints: model
                .joints()
                .iter()
                .map(|j| JointDocument {
                    joint_type: j.joint_type,
                    axis: j.axis.into(),
                    pivot: j.pivot.into(),
                    limits: [j.limits.min, j.limits.max],
                    parent: j.parent,
                    child: j.child,
                })
                .collect(),
            root: model.root(),
            nocs_frames: None,
        }
    }

    pub fn into_model(self) -> Result<ArticulatedModel> {
        let parts = self
            .parts
            .into_iter()
            .enumerate()
            .map(|(i, p)| Part {
                index: i + 1,
                name: p.name,
                rest_points: p.rest_points.into_iter().map(Vec3::from).collect(),
            })
            .collect();
        let joints = self
            .joints
            .into_iter()
            .map(|j| JointSpec {
                joint_type: j.joint_type,
                axis: Vec3::from(j.axis),
                pivot: Vec3::from(j.pivot),
                limits: JointLimits::new(j.limits[0], j.limits[1]),
                parent: j.parent,
                child: j.child,
            })
            .collect();
        let frames = self
            .nocs_frames
            .map(|frames| {
                frames
                    .into_iter()
                    .map(|f| {
                        let basis = from_row_major(&f.basis);
                        if !is_rotation(&basis, 1e-9) || !(f.scale > 0.0) {
                            return Err(Error::Malformed("invalid nocs frame".into()));
                        }
                        Ok(NocsFrame {
                            center: Vec3::from(f.center),
                            scale: f.scale,
                            basis: Rotation3::from_matrix_unchecked(basis),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let id = self.id.unwrap_or_else(|| self.category.clone());
        ArticulatedModel::new(id, self.category, parts, joints, self.root, frames)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl FrameDocument {
    pub fn from_frame(frame: &NocsFrame) -> Self {
        Self {
            center: frame.center.into(),
            scale: frame.scale,
            basis: row_major(frame.basis.matrix()),
        }
    }
}

/// Parses and validates a model document.
pub fn load_model(document: &[u8]) -> Result<ArticulatedModel> {
    let doc: ModelDocument = serde_json::from_slice(document).map_err(|e| Error::Malformed(e.to_string()))?;
    doc.into_model()
}
