use std::f64::consts::TAU;

use nalgebra::{Matrix3, Rotation3, Translation3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{rotation_about, tight_bounds, transform_point, OrientedBox, Rigid, Similarity, Vec3};
use crate::kinematics::{forward_kinematics, ArticulatedModel, JointType};

use super::camera::{BBox2d, CameraModel};
use super::collision::obb_intersects;
use super::plane::PlaneModel;

/// Points closer to the camera than this (meters, along the optical axis)
/// make a placement invalid.
const NEAR_CLIP: f64 = 0.05;

/// Joint type, axis and location of the joint driving one part, in the
/// camera frame. The root part carries an implicit fixed joint at the
/// object origin along the object's up axis.
#[derive(Clone, Debug, PartialEq)]
pub struct JointParams {
    pub joint_type: JointType,
    pub axis: Vec3,
    pub location: Vec3,
}

/// One placed articulated object with its ground-truth annotations.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneInstance {
    pub model_id: String,
    pub category: String,
    /// Object frame → world.
    pub base_pose: Rigid,
    pub scale: f64,
    pub joint_states: Vec<f64>,
    pub bbox2d: BBox2d,
    /// Rest object frame → camera, slot `k-1` for part `k`.
    pub part_poses_cam: Vec<Similarity>,
    /// Slot `k-1` for part `k`.
    pub joint_params_cam: Vec<JointParams>,
}

impl SceneInstance {
    /// Builds the camera-frame annotations of a model posed at
    /// `base_pose ∘ scale ∘ FK(joint_states)`.
    pub fn annotate(
        model: &ArticulatedModel,
        base_pose: Rigid,
        scale: f64,
        joint_states: Vec<f64>,
        camera: &CameraModel,
    ) -> Result<SceneInstance> {
        let fk = forward_kinematics(model, &joint_states)?;
        let object_to_cam = camera.pose * base_pose;
        let part_poses_cam: Vec<Similarity> = fk
            .iter()
            .map(|pose| Similarity::from_rigid_scaled(&object_to_cam, scale, pose))
            .collect();
        let joint_params_cam = (1..=model.num_parts())
            .map(|k| match model.parent_joint(k) {
                Some(joint) => {
                    let parent = &part_poses_cam[joint.parent - 1];
                    JointParams {
                        joint_type: joint.joint_type,
                        axis: parent.rotation * joint.axis,
                        location: parent.apply(&joint.pivot),
                    }
                }
                None => JointParams {
                    joint_type: JointType::Fixed,
                    axis: object_to_cam.rotation * Vec3::z(),
                    location: object_to_cam.translation.vector,
                },
            })
            .collect();
        let posed = posed_points(model, &part_poses_cam);
        let bbox2d = BBox2d::of_points(camera, posed.iter()).ok_or(Error::OutOfView)?;
        Ok(SceneInstance {
            model_id: model.id().to_string(),
            category: model.category().to_string(),
            base_pose,
            scale,
            joint_states,
            bbox2d,
            part_poses_cam,
            joint_params_cam,
        })
    }
}

fn posed_points(model: &ArticulatedModel, poses: &[Similarity]) -> Vec<Vec3> {
    model
        .parts()
        .iter()
        .flat_map(|part| {
            let pose = &poses[part.index - 1];
            part.rest_points.iter().map(move |p| pose.apply(p))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacementConfig {
    pub count: usize,
    /// Uniform object scale range, both ends positive.
    pub scale_range: (f64, f64),
    /// Consecutive rejected samples tolerated for a single instance.
    pub max_rejections: usize,
    /// Tabletop region as a simple polygon in the plane's `(e1, e2)`
    /// coordinates (see [`PlaneModel::basis`]).
    pub region: Vec<[f64; 2]>,
}

impl PlacementConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig("scale range must lie in (0, ∞)".into()));
        }
        if self.max_rejections == 0 {
            return Err(Error::InvalidConfig("max_rejections must be ≥ 1".into()));
        }
        if self.region.len() < 3 {
            return Err(Error::InvalidConfig("region polygon needs ≥ 3 vertices".into()));
        }
        Ok(())
    }
}

fn polygon_contains(poly: &[[f64; 2]], u: f64, v: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > v) != (b[1] > v) && u < (b[0] - a[0]) * (v - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// World-frame oriented box of a placed object: tight box of its posed
/// points in the object's upright frame.
fn object_box(base: &Rigid, object_points: &[Vec3]) -> Result<OrientedBox> {
    let (lo, hi) = tight_bounds(object_points).ok_or(Error::EmptyPart(0))?;
    let local = OrientedBox::axis_aligned(lo, hi)?;
    Ok(OrientedBox {
        center: transform_point(base, &local.center),
        rotation: base.rotation,
        half_extents: local.half_extents,
    })
}

/// Randomly places `config.count` instances of the given models upright on
/// the plane. Joint states, scale, yaw and position are uniform; each object
/// is lowered until its lowest point touches the plane; samples that collide
/// with already placed objects or leave the camera view are rejected.
pub fn place_instances(
    models: &[ArticulatedModel],
    plane: &PlaneModel,
    camera: &CameraModel,
    config: &PlacementConfig,
    rng_seed: u64,
) -> Result<Vec<SceneInstance>> {
    config.validate()?;
    if config.count == 0 {
        return Ok(Vec::new());
    }
    if models.is_empty() {
        return Err(Error::InvalidConfig("no models to place".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (e1, e2) = plane.basis();
    let upright = Matrix3::from_columns(&[e1, e2, plane.normal]);
    let (umin, umax, vmin, vmax) = config.region.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p[0]), b.max(p[0]), c.min(p[1]), d.max(p[1])),
    );

    let mut instances = Vec::with_capacity(config.count);
    let mut boxes: Vec<OrientedBox> = Vec::with_capacity(config.count);
    while instances.len() < config.count {
        let mut rejections = 0;
        loop {
            if rejections >= config.max_rejections {
                return Err(Error::PlacementFailure(rejections));
            }
            let model = &models[rng.random_range(0..models.len())];
            let states: Vec<f64> = model
                .joints()
                .iter()
                .map(|j| {
                    if j.limits.max > j.limits.min {
                        rng.random_range(j.limits.min..=j.limits.max)
                    } else {
                        j.limits.min
                    }
                })
                .collect();
            let (slo, shi) = config.scale_range;
            let scale = if shi > slo { rng.random_range(slo..=shi) } else { slo };
            let yaw = rng.random_range(0.0..TAU);
            let u = rng.random_range(umin..=umax);
            let v = rng.random_range(vmin..=vmax);
            if !polygon_contains(&config.region, u, v) {
                rejections += 1;
                continue;
            }

            let fk = forward_kinematics(model, &states)?;
            let object_points: Vec<Vec3> = model
                .parts()
                .iter()
                .flat_map(|part| {
                    let pose = fk[part.index - 1];
                    part.rest_points.iter().map(move |p| transform_point(&pose, p) * scale)
                })
                .collect();
            let rot = Rotation3::from_matrix_unchecked(upright) * rotation_about(&Vec3::z(), yaw);
            // lowest point onto the plane
            let lowest = object_points
                .iter()
                .map(|p| plane.normal.dot(&(rot * p)))
                .fold(f64::INFINITY, f64::min);
            let origin = plane.point_at(u, v) - plane.normal * lowest;
            let base = Rigid::from_parts(Translation3::from(origin), rot);

            let in_view = object_points.iter().all(|p| {
                let c = camera.to_camera(&transform_point(&base, p));
                c.z > NEAR_CLIP && camera.project(&c).is_some_and(|uv| camera.in_image(uv))
            });
            if !in_view {
                rejections += 1;
                continue;
            }
            let bx = object_box(&base, &object_points)?;
            let mut collides = false;
            for other in &boxes {
                if obb_intersects(&bx, other)? {
                    collides = true;
                    break;
                }
            }
            if collides {
                rejections += 1;
                continue;
            }
            instances.push(SceneInstance::annotate(model, base, scale, states, camera)?);
            boxes.push(bx);
            break;
        }
    }
    Ok(instances)
}

/// World-frame oriented box of an already placed instance.
pub fn instance_box(model: &ArticulatedModel, instance: &SceneInstance) -> Result<OrientedBox> {
    let fk = forward_kinematics(model, &instance.joint_states)?;
    let object_points: Vec<Vec3> = model
        .parts()
        .iter()
        .flat_map(|part| {
            let pose = fk[part.index - 1];
            part.rest_points
                .iter()
                .map(move |p| transform_point(&pose, p) * instance.scale)
        })
        .collect();
    object_box(&instance.base_pose, &object_points)
}

/// Height of the lowest point of a placed instance above the plane.
pub fn contact_residual(model: &ArticulatedModel, instance: &SceneInstance, plane: &PlaneModel) -> Result<f64> {
    let fk = forward_kinematics(model, &instance.joint_states)?;
    let lowest = model
        .parts()
        .iter()
        .flat_map(|part| {
            let pose = fk[part.index - 1];
            part.rest_points.iter().map(move |p| {
                let world = transform_point(&instance.base_pose, &(transform_point(&pose, p) * instance.scale));
                plane.signed_distance(&world)
            })
        })
        .fold(f64::INFINITY, f64::min);
    Ok(lowest)
}
