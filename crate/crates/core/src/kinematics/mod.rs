//! Articulated models: parts, typed joints forming a tree, forward
//! kinematics, and the per-part normalized coordinate frames defined at the
//! rest state (all joint states zero).
//!
//! Part indices are 1-based so they coincide with segmentation labels, where
//! label 0 is reserved for background.

mod builder;
pub mod catalog;
mod document;

pub use builder::ModelBuilder;
pub use document::{load_model, ModelDocument};

use nalgebra::{Rotation3, Translation3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_about, tight_bounds, OrientedBox, Rigid, Vec3};

/// Tolerance within which a joint axis is silently renormalized.
pub const AXIS_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Fixed,
    Prismatic,
    Revolute,
}

impl JointType {
    pub const ALL: [JointType; 3] = [JointType::Fixed, JointType::Prismatic, JointType::Revolute];

    /// Position in the `{Fixed, Prismatic, Revolute}` class order.
    pub fn class_index(self) -> usize {
        self as usize
    }

    pub fn from_class_index(i: usize) -> Option<JointType> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub min: f64,
    pub max: f64,
}

impl JointLimits {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// A joint between a parent and a child part. Axis and pivot are expressed
/// in the parent frame at rest, which is the object frame.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpec {
    pub joint_type: JointType,
    pub axis: Vec3,
    pub pivot: Vec3,
    pub limits: JointLimits,
    pub parent: usize,
    pub child: usize,
}

impl JointSpec {
    /// Motion of the child relative to its parent at `state`.
    pub fn motion(&self, state: f64) -> Rigid {
        match self.joint_type {
            JointType::Fixed => Rigid::identity(),
            JointType::Prismatic => Rigid::from_parts(Translation3::from(self.axis * state), Rotation3::identity()),
            JointType::Revolute => {
                let rot = rotation_about(&self.axis, state);
                let t = self.pivot - rot * self.pivot;
                Rigid::from_parts(Translation3::from(t), rot)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    pub index: usize,
    pub name: String,
    pub rest_points: Vec<Vec3>,
}

impl Part {
    /// Tight axis-aligned box of the rest points in the object frame.
    pub fn rest_box(&self) -> Result<OrientedBox> {
        let (lo, hi) = tight_bounds(&self.rest_points).ok_or(Error::EmptyPart(self.index))?;
        OrientedBox::axis_aligned(lo, hi).map_err(|_| Error::DegeneratePart(self.index))
    }
}

/// Canonical unit-cube frame of one part: `p′ = basisᵀ(p − center)/scale + ½`.
#[derive(Clone, Debug, PartialEq)]
pub struct NocsFrame {
    pub center: Vec3,
    pub scale: f64,
    pub basis: Rotation3<f64>,
}

impl NocsFrame {
    /// Frame of a rest-state point set: box center, longest box side, and
    /// the object axes as basis.
    pub fn from_points(points: &[Vec3]) -> Option<NocsFrame> {
        let (lo, hi) = tight_bounds(points)?;
        let scale = (hi - lo).max();
        if !(scale > 0.0 && scale.is_finite()) {
            return None;
        }
        Some(NocsFrame {
            center: (lo + hi) * 0.5,
            scale,
            basis: Rotation3::identity(),
        })
    }

    pub fn to_nocs(&self, p: &Vec3) -> Vec3 {
        self.basis.inverse() * (p - self.center) / self.scale + Vec3::repeat(0.5)
    }

    pub fn from_nocs(&self, q: &Vec3) -> Vec3 {
        self.basis * ((q - Vec3::repeat(0.5)) * self.scale) + self.center
    }
}

/// NOCS images of a point set plus the indices that fell outside the unit
/// cube (expected only for points that are not at rest).
#[derive(Clone, Debug, PartialEq)]
pub struct NocsMap {
    pub coords: Vec<Vec3>,
    pub outside: Vec<usize>,
}

pub fn nocs_of_points(frame: &NocsFrame, points: &[Vec3]) -> NocsMap {
    const SLACK: f64 = 1e-12;
    let coords: Vec<Vec3> = points.iter().map(|p| frame.to_nocs(p)).collect();
    let outside = coords
        .iter()
        .enumerate()
        .filter(|(_, c)| c.iter().any(|v| *v < -SLACK || *v > 1.0 + SLACK))
        .map(|(i, _)| i)
        .collect();
    NocsMap { coords, outside }
}

/// A validated articulated model. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ArticulatedModel {
    id: String,
    category: String,
    parts: Vec<Part>,
    joints: Vec<JointSpec>,
    nocs_frames: Vec<NocsFrame>,
    root: usize,
    // joint indices in parent-before-child order
    order: Vec<usize>,
    // joint index whose child is part k (slot k-1), None for the root
    joint_of_child: Vec<Option<usize>>,
}

impl ArticulatedModel {
    /// Validates and assembles a model. Frames are recomputed from the rest
    /// points when `nocs_frames` is `None`.
    pub fn new(
        id: impl Into<String>,
        category: impl Into<String>,
        parts: Vec<Part>,
        mut joints: Vec<JointSpec>,
        root: usize,
        nocs_frames: Option<Vec<NocsFrame>>,
    ) -> Result<Self> {
        let category = category.into();
        if category.is_empty() {
            return Err(Error::Malformed("empty category".into()));
        }
        let k = parts.len();
        if k == 0 {
            return Err(Error::Malformed("model has no parts".into()));
        }
        for (i, part) in parts.iter().enumerate() {
            if part.index != i + 1 {
                return Err(Error::Malformed(format!(
                    "part at position {} has index {}",
                    i + 1,
                    part.index
                )));
            }
            if part.rest_points.is_empty() {
                return Err(Error::EmptyPart(part.index));
            }
            if part.rest_points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
                return Err(Error::Malformed(format!("part {} has non-finite points", part.index)));
            }
        }
        if root == 0 || root > k {
            return Err(Error::NotATree(format!("root {root} is not a part index")));
        }
        if joints.len() != k - 1 {
            return Err(Error::NotATree(format!(
                "{} parts need {} joints, found {}",
                k,
                k - 1,
                joints.len()
            )));
        }

        let mut joint_of_child = vec![None; k];
        for (j, joint) in joints.iter_mut().enumerate() {
            let norm = joint.axis.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > AXIS_NORM_TOLERANCE {
                return Err(Error::NonUnitAxis { index: j, norm });
            }
            joint.axis /= norm;
            if !joint.pivot.iter().all(|v| v.is_finite()) {
                return Err(Error::Malformed(format!("joint {j} pivot is not finite")));
            }
            let lim = joint.limits;
            if !(lim.min <= lim.max) || (joint.joint_type == JointType::Fixed && (lim.min != 0.0 || lim.max != 0.0)) {
                return Err(Error::InvalidLimits(j));
            }
            for end in [joint.parent, joint.child] {
                if end == 0 || end > k {
                    return Err(Error::NotATree(format!("joint {j} references part {end}")));
                }
            }
            if joint.parent == joint.child {
                return Err(Error::NotATree(format!(
                    "joint {j} links part {} to itself",
                    joint.child
                )));
            }
            if joint.child == root {
                return Err(Error::NotATree(format!("root part {root} is the child of joint {j}")));
            }
            let slot = &mut joint_of_child[joint.child - 1];
            if slot.is_some() {
                return Err(Error::NotATree(format!("part {} has two parent joints", joint.child)));
            }
            *slot = Some(j);
        }

        // breadth-first from the root; every part must be reached
        let mut order = Vec::with_capacity(joints.len());
        let mut reached = vec![false; k];
        reached[root - 1] = true;
        let mut frontier = vec![root];
        while let Some(p) = frontier.pop() {
            for (j, joint) in joints.iter().enumerate() {
                if joint.parent == p && !reached[joint.child - 1] {
                    reached[joint.child - 1] = true;
                    order.push(j);
                    frontier.push(joint.child);
                }
            }
        }
        if let Some(missing) = reached.iter().position(|r| !r) {
            return Err(Error::NotATree(format!(
                "part {} is not connected to the root",
                missing + 1
            )));
        }

        let nocs_frames = match nocs_frames {
            Some(frames) if frames.len() == k => frames,
            Some(frames) => {
                return Err(Error::Malformed(format!(
                    "{} nocs frames for {} parts",
                    frames.len(),
                    k
                )))
            }
            None => parts
                .iter()
                .map(|p| NocsFrame::from_points(&p.rest_points).ok_or(Error::DegeneratePart(p.index)))
                .collect::<Result<_>>()?,
        };

        Ok(Self {
            id: id.into(),
            category,
            parts,
            joints,
            nocs_frames,
            root,
            order,
            joint_of_child,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// Part by 1-based index.
    pub fn part(&self, index: usize) -> &Part {
        &self.parts[index - 1]
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn nocs_frames(&self) -> &[NocsFrame] {
        &self.nocs_frames
    }

    pub fn nocs_frame(&self, index: usize) -> &NocsFrame {
        &self.nocs_frames[index - 1]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Joint whose child is part `index`, `None` for the root.
    pub fn parent_joint(&self, index: usize) -> Option<&JointSpec> {
        self.joint_of_child[index - 1].map(|j| &self.joints[j])
    }

    /// `(parent, child)` part pairs of the kinematic tree.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.joints.iter().map(|j| (j.parent, j.child)).collect()
    }

    /// The rest configuration.
    pub fn zero_state(&self) -> Vec<f64> {
        vec![0.0; self.joints.len()]
    }
}

/// Per-part rigid transforms (object frame, slot `k-1` for part `k`) for the
/// given joint states, one state per joint in model order.
pub fn forward_kinematics(model: &ArticulatedModel, joint_states: &[f64]) -> Result<Vec<Rigid>> {
    if joint_states.len() != model.joints.len() {
        return Err(Error::StateCount {
            expected: model.joints.len(),
            actual: joint_states.len(),
        });
    }
    for (index, (joint, &value)) in model.joints.iter().zip(joint_states).enumerate() {
        if !joint.limits.contains(value) {
            return Err(Error::StateOutOfLimits {
                index,
                value,
                min: joint.limits.min,
                max: joint.limits.max,
            });
        }
    }
    let mut poses = vec![Rigid::identity(); model.num_parts()];
    for &j in &model.order {
        let joint = &model.joints[j];
        poses[joint.child - 1] = poses[joint.parent - 1] * joint.motion(joint_states[j]);
    }
    Ok(poses)
}

/// Inverse-kinematics helper used by tests and diagnostics: maps posed
/// points of part `k` back to rest coordinates.
pub fn unpose(pose: &Rigid, points: &[Vec3]) -> Vec<Vec3> {
    let inv = pose.inverse();
    points
        .iter()
        .map(|p| inv.rotation * p + inv.translation.vector)
        .collect()
}
