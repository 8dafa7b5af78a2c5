//! Shared geometric primitives: rigid and similarity transforms, oriented
//! boxes, and a few rotation utilities.

use nalgebra::{IsometryMatrix3, Matrix3, Rotation3, Unit, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Rigid transform with the rotation stored as a matrix.
pub type Rigid = IsometryMatrix3<f64>;

/// Applies a rigid transform to a point.
pub fn transform_point(pose: &Rigid, p: &Vec3) -> Vec3 {
    pose.rotation * p + pose.translation.vector
}

/// Rotation of `angle` radians about a unit `axis`.
pub fn rotation_about(axis: &Vec3, angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle)
}

pub fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// True when `m` is orthonormal with determinant +1 within `tol`.
pub fn is_rotation(m: &Matrix3<f64>, tol: f64) -> bool {
    let gram = m.transpose() * m - Matrix3::identity();
    gram.amax() <= tol && (m.determinant() - 1.0).abs() <= tol
}

/// Geodesic angle (radians) between two rotations.
///
/// Evaluated as `atan2(sin θ, cos θ)` so that angles near zero keep full
/// precision, where the plain arccos of the trace loses half the digits.
pub fn geodesic_angle(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let rel = a.transpose() * b;
    let cos = ((rel.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let sin = 0.5
        * Vec3::new(
            rel[(2, 1)] - rel[(1, 2)],
            rel[(0, 2)] - rel[(2, 0)],
            rel[(1, 0)] - rel[(0, 1)],
        )
        .norm();
    sin.atan2(cos)
}

/// Re-orthonormalizes a nearly orthogonal matrix onto SO(3).
pub fn project_to_rotation(m: &Matrix3<f64>) -> Rotation3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let d = (u * v_t).determinant().signum();
    let r = u * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * v_t;
    Rotation3::from_matrix_unchecked(r)
}

/// Axis-aligned bounds of a point set, `None` when empty.
pub fn tight_bounds(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = points.first()?;
    Some(
        points
            .iter()
            .fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p))),
    )
}

/// Similarity transform `x ↦ s·R·x + t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    pub rotation: Rotation3<f64>,
    pub translation: Vec3,
    pub scale: f64,
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            rotation: Rotation3::identity(),
            translation: Vec3::zeros(),
            scale: 1.0,
        }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vec3, scale: f64) -> Self {
        Self {
            rotation,
            translation,
            scale,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.scale * (self.rotation * p) + self.translation
    }

    /// Inverse map `y ↦ Rᵀ(y − t)/s`.
    pub fn apply_inverse(&self, p: &Vec3) -> Vec3 {
        self.rotation.inverse() * (p - self.translation) / self.scale
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Similarity) -> Similarity {
        Similarity {
            rotation: self.rotation * other.rotation,
            translation: self.apply(&other.translation),
            scale: self.scale * other.scale,
        }
    }

    /// Similarity equal to `outer ∘ scale ∘ inner` for rigid `outer`/`inner`.
    pub fn from_rigid_scaled(outer: &Rigid, scale: f64, inner: &Rigid) -> Similarity {
        Similarity {
            rotation: outer.rotation * inner.rotation,
            translation: outer.rotation * (scale * inner.translation.vector) + outer.translation.vector,
            scale,
        }
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        row_major(self.rotation.matrix())
    }
}

pub fn row_major(m: &Matrix3<f64>) -> [f64; 9] {
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ]
}

pub fn from_row_major(v: &[f64; 9]) -> Matrix3<f64> {
    Matrix3::from_row_slice(v)
}

/// Box with arbitrary center, orientation and half extents. The box axes
/// are the columns of `rotation`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub rotation: Rotation3<f64>,
    pub half_extents: Vec3,
}

impl OrientedBox {
    pub fn new(center: Vec3, rotation: Rotation3<f64>, half_extents: Vec3) -> Result<Self> {
        let b = Self {
            center,
            rotation,
            half_extents,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn axis_aligned(min: Vec3, max: Vec3) -> Result<Self> {
        Self::new((min + max) * 0.5, Rotation3::identity(), (max - min) * 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_extents.iter().all(|h| h.is_finite() && *h > 0.0) {
            Ok(())
        } else {
            Err(Error::NonPositiveExtent)
        }
    }

    pub fn axis(&self, i: usize) -> Vec3 {
        self.rotation.matrix().column(i).into_owned()
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    /// Eight corners; corner `i` uses sign bit `k` of `i` along axis `k`.
    pub fn corners(&self) -> [Vec3; 8] {
        std::array::from_fn(|i| {
            let local = Vec3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 } * self.half_extents.x,
                if i & 2 == 0 { -1.0 } else { 1.0 } * self.half_extents.y,
                if i & 4 == 0 { -1.0 } else { 1.0 } * self.half_extents.z,
            );
            self.center + self.rotation * local
        })
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Vec3) -> bool {
        let local = self.rotation.inverse() * (p - self.center);
        (0..3).all(|i| local[i].abs() <= self.half_extents[i])
    }

    /// Image of the box under a similarity.
    pub fn transformed(&self, sim: &Similarity) -> OrientedBox {
        OrientedBox {
            center: sim.apply(&self.center),
            rotation: sim.rotation * self.rotation,
            half_extents: self.half_extents * sim.scale,
        }
    }
}
