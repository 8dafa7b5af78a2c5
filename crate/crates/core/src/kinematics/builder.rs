use crate::error::Result;
use crate::geometry::Vec3;

use super::{ArticulatedModel, JointLimits, JointSpec, JointType, Part};

/// Programmatic construction of articulated models from point sets or
/// sampled cuboid surfaces.
#[derive(Clone, Debug)]
pub struct ModelBuilder {
    id: Option<String>,
    category: String,
    parts: Vec<Part>,
    joints: Vec<JointSpec>,
    root: usize,
}

impl ModelBuilder {
    pub fn new(category: impl Into<String>) -> Self {
        Self {
            id: None,
            category: category.into(),
            parts: Vec::new(),
            joints: Vec::new(),
            root: 1,
        }
    }

    pub fn id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn root(mut self, root: usize) -> Self {
        self.root = root;
        self
    }

    /// Adds a part from explicit rest points. Parts are numbered 1, 2, ...
    /// in insertion order.
    pub fn points(mut self, name: impl Into<String>, rest_points: Vec<Vec3>) -> Self {
        let index = self.parts.len() + 1;
        self.parts.push(Part {
            index,
            name: name.into(),
            rest_points,
        });
        self
    }

    /// Adds a part sampled on the surface of the box `[min, max]` with an
    /// `n × n` grid of cells per face.
    pub fn cuboid(self, name: impl Into<String>, min: Vec3, max: Vec3, n: usize) -> Self {
        self.points(name, cuboid_surface(min, max, n))
    }

    pub fn joint(
        mut self,
        joint_type: JointType,
        parent: usize,
        child: usize,
        axis: Vec3,
        pivot: Vec3,
        limits: (f64, f64),
    ) -> Self {
        self.joints.push(JointSpec {
            joint_type,
            axis,
            pivot,
            limits: JointLimits::new(limits.0, limits.1),
            parent,
            child,
        });
        self
    }

    pub fn build(self) -> Result<ArticulatedModel> {
        let id = self.id.unwrap_or_else(|| self.category.clone());
        ArticulatedModel::new(id, self.category, self.parts, self.joints, self.root, None)
    }
}

/// Grid samples on the six faces of an axis-aligned box, corners and edges
/// included once.
pub fn cuboid_surface(min: Vec3, max: Vec3, n: usize) -> Vec<Vec3> {
    let n = n.max(1);
    let coord = |axis: usize, i: usize| min[axis] + (max[axis] - min[axis]) * i as f64 / n as f64;
    let mut pts = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let on_surface = [i, j, k].iter().any(|&c| c == 0 || c == n);
                if on_surface {
                    pts.push(Vec3::new(coord(0, i), coord(1, j), coord(2, k)));
                }
            }
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cuboid_surface_counts_and_bounds() {
        let pts = cuboid_surface(Vec3::zeros(), Vec3::new(0.2, 0.1, 0.1), 4);
        // (n+1)^3 - (n-1)^3 surface nodes
        assert_eq!(pts.len(), 125 - 27);
        let (lo, hi) = crate::geometry::tight_bounds(&pts).unwrap();
        assert_eq!(lo, Vec3::zeros());
        assert_eq!(hi, Vec3::new(0.2, 0.1, 0.1));
    }
}
