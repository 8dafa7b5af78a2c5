use nalgebra::{Matrix3, Rotation3, Translation3};

use crate::error::{Error, Result};
use crate::geometry::{transform_point, Rigid, Vec3};

/// Pinhole camera; `pose` maps world points into the camera frame
/// (x right, y down, z forward).
#[derive(Clone, Debug, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub pose: Rigid,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32, pose: Rigid) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            pose,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidConfig("focal lengths must be positive".into()));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64 && self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidConfig("principal point outside the image".into()));
        }
        Ok(())
    }

    /// World→camera pose of a camera at `eye` looking at `target`, with
    /// `up` roughly opposite the image y axis.
    pub fn look_at(eye: &Vec3, target: &Vec3, up: &Vec3) -> Rigid {
        let z = (target - eye).normalize();
        let x = z.cross(up).normalize();
        let y = z.cross(&x);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]));
        Rigid::from_parts(Translation3::from(-(rot * eye)), rot)
    }

    /// Camera center in world coordinates.
    pub fn center_world(&self) -> Vec3 {
        self.pose.inverse().translation.vector
    }

    pub fn to_camera(&self, world: &Vec3) -> Vec3 {
        transform_point(&self.pose, world)
    }

    /// Pixel coordinates of a camera-frame point, `None` when not in front.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    pub fn in_image(&self, uv: (f64, f64)) -> bool {
        uv.0 >= 0.0 && uv.1 >= 0.0 && uv.0 <= self.width as f64 && uv.1 <= self.height as f64
    }
}

/// Axis-aligned pixel box `(u1, v1, u2, v2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox2d {
    pub u1: f64,
    pub v1: f64,
    pub u2: f64,
    pub v2: f64,
}

impl BBox2d {
    pub fn area(&self) -> f64 {
        (self.u2 - self.u1).max(0.0) * (self.v2 - self.v1).max(0.0)
    }

    pub fn iou(&self, other: &BBox2d) -> f64 {
        let inter = BBox2d {
            u1: self.u1.max(other.u1),
            v1: self.v1.max(other.v1),
            u2: self.u2.min(other.u2),
            v2: self.v2.min(other.v2),
        }
        .area();
        let union = self.area() + other.area() - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }

    /// Tight box of the projections of camera-frame points with positive
    /// depth, clamped to the image. `None` when no point projects or the box
    /// collapses after clamping.
    pub fn of_points<'a>(camera: &CameraModel, points: impl IntoIterator<Item = &'a Vec3>) -> Option<BBox2d> {
        let mut bounds: Option<BBox2d> = None;
        for uv in points.into_iter().filter_map(|p| camera.project(p)) {
            let b = bounds.get_or_insert(BBox2d {
                u1: uv.0,
                v1: uv.1,
                u2: uv.0,
                v2: uv.1,
            });
            b.u1 = b.u1.min(uv.0);
            b.v1 = b.v1.min(uv.1);
            b.u2 = b.u2.max(uv.0);
            b.v2 = b.v2.max(uv.1);
        }
        let (w, h) = (camera.width as f64, camera.height as f64);
        let b = bounds?;
        let clamped = BBox2d {
            u1: b.u1.clamp(0.0, w),
            v1: b.v1.clamp(0.0, h),
            u2: b.u2.clamp(0.0, w),
            v2: b.v2.clamp(0.0, h),
        };
        (clamped.u1 < clamped.u2 && clamped.v1 < clamped.v2).then_some(clamped)
    }
}
