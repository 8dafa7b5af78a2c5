use nalgebra::{Rotation3, Translation3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{from_row_major, project_to_rotation, row_major, Rigid, Similarity, Vec3};
use crate::kinematics::JointType;
use crate::scenegen::{BBox2d, CameraModel, JointParams, PlaneModel, SceneInstance};

fn rotation_from(r: &[f64; 9]) -> Result<Rotation3<f64>> {
    let m = from_row_major(r);
    if !crate::geometry::is_rotation(&m, 1e-9) {
        return Err(Error::NotARotation);
    }
    // remove last-bit drift so downstream checks see an exact rotation
    Ok(project_to_rotation(&m))
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn vec3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseDocument {
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
}

impl PoseDocument {
    pub fn from_rigid(p: &Rigid) -> Self {
        Self {
            r: row_major(p.rotation.matrix()),
            t: arr(&p.translation.vector),
        }
    }

    pub fn to_rigid(&self) -> Result<Rigid> {
        Ok(Rigid::from_parts(
            Translation3::from(vec3(&self.t)),
            rotation_from(&self.r)?,
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDocument {
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
    pub s: f64,
}

impl SimilarityDocument {
    pub fn from_similarity(s: &Similarity) -> Self {
        Self {
            r: s.rotation_row_major(),
            t: arr(&s.translation),
            s: s.scale,
        }
    }

    pub fn to_similarity(&self) -> Result<Similarity> {
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::Malformed(format!("non-positive scale {}", self.s)));
        }
        Ok(Similarity::new(rotation_from(&self.r)?, vec3(&self.t), self.s))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraDocument {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// World → camera.
    pub pose: PoseDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDocument {
    #[serde(rename = "type")]
    pub joint_type: JointType,
    pub axis: [f64; 3],
    pub location: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub model_id: String,
    pub category: String,
    /// Object → world.
    pub base_pose: PoseDocument,
    pub scale: f64,
    pub joint_states: Vec<f64>,
    pub bbox2d: [f64; 4],
    /// Rest object frame → camera, one per part.
    pub part_poses: Vec<SimilarityDocument>,
    pub joints: Vec<JointDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneDocument {
    pub normal: [f64; 3],
    pub offset: f64,
    pub inlier_count: usize,
}

/// Ground truth of one generated scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub scene: usize,
    pub seed: u64,
    pub camera: CameraDocument,
    pub plane: PlaneDocument,
    pub instances: Vec<InstanceDocument>,
}

impl SceneDocument {
    pub fn new(scene: usize, seed: u64, camera: &CameraModel, plane: &PlaneModel, instances: &[SceneInstance]) -> Self {
        Self {
            scene,
            seed,
            camera: CameraDocument {
                fx: camera.fx,
                fy: camera.fy,
                cx: camera.cx,
                cy: camera.cy,
                width: camera.width,
                height: camera.height,
                pose: PoseDocument::from_rigid(&camera.pose),
            },
            plane: PlaneDocument {
                normal: arr(&plane.normal),
                offset: plane.offset,
                inlier_count: plane.inlier_count,
            },
            instances: instances
                .iter()
                .map(|i| InstanceDocument {
                    model_id: i.model_id.clone(),
                    category: i.category.clone(),
                    base_pose: PoseDocument::from_rigid(&i.base_pose),
                    scale: i.scale,
                    joint_states: i.joint_states.clone(),
                    bbox2d: [i.bbox2d.u1, i.bbox2d.v1, i.bbox2d.u2, i.bbox2d.v2],
                    part_poses: i
                        .part_poses_cam
                        .iter()
                        .map(SimilarityDocument::from_similarity)
                        .collect(),
                    joints: i
                        .joint_params_cam
                        .iter()
                        .map(|j| JointDocument {
                            joint_type: j.joint_type,
                            axis: arr(&j.axis),
                            location: arr(&j.location),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn camera(&self) -> Result<CameraModel> {
        let c = &self.camera;
        CameraModel::new(c.fx, c.fy, c.cx, c.cy, c.width, c.height, c.pose.to_rigid()?)
    }

    pub fn plane(&self) -> PlaneModel {
        PlaneModel {
            normal: vec3(&self.plane.normal),
            offset: self.plane.offset,
            inlier_count: self.plane.inlier_count,
        }
    }

    pub fn scene_instances(&self) -> Result<Vec<SceneInstance>> {
        self.instances
            .iter()
            .map(|d| {
                let [u1, v1, u2, v2] = d.bbox2d;
                Ok(SceneInstance {
                    model_id: d.model_id.clone(),
                    category: d.category.clone(),
                    base_pose: d.base_pose.to_rigid()?,
                    scale: d.scale,
                    joint_states: d.joint_states.clone(),
                    bbox2d: BBox2d { u1, v1, u2, v2 },
                    part_poses_cam: d.part_poses.iter().map(|p| p.to_similarity()).collect::<Result<_>>()?,
                    joint_params_cam: d
                        .joints
                        .iter()
                        .map(|j| JointParams {
                            joint_type: j.joint_type,
                            axis: vec3(&j.axis),
                            location: vec3(&j.location),
                        })
                        .collect(),
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))
    }
}
