//! Synthetic tabletop scenes: a RANSAC-estimated support plane, random
//! upright placement of articulated models free of collisions and floating,
//! and fully annotated per-instance point-cloud observations.

mod camera;
mod collision;
mod observation;
mod placement;
mod plane;

pub use camera::{BBox2d, CameraModel};
pub use collision::{obb_intersects, TOUCH_TOLERANCE};
pub use observation::{part_color, sample_observation, Observation};
pub use placement::{contact_residual, instance_box, place_instances, JointParams, PlacementConfig, SceneInstance};
pub use plane::{fit_plane_ransac, PlaneModel};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Vec3;

/// Synthetic background: points on a planar tabletop patch plus uniform
/// clutter in a box above it. Returns the combined cloud, tabletop first.
pub fn synthetic_background(
    plane_height: f64,
    half_size: f64,
    table_points: usize,
    clutter_points: usize,
    rng_seed: u64,
) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pts = Vec::with_capacity(table_points + clutter_points);
    for _ in 0..table_points {
        pts.push(Vec3::new(
            rng.random_range(-half_size..=half_size),
            rng.random_range(-half_size..=half_size),
            plane_height,
        ));
    }
    for _ in 0..clutter_points {
        pts.push(Vec3::new(
            rng.random_range(-half_size..=half_size),
            rng.random_range(-half_size..=half_size),
            plane_height + rng.random_range(-0.5..=0.5) * half_size,
        ));
    }
    pts
}

/// 640×480 pinhole camera with 600 px focal length, 0.9 m above a table at
/// `table_height`, looking down at the origin of the tabletop from the −y
/// side.
pub fn desk_camera(table_height: f64) -> CameraModel {
    let eye = Vec3::new(0.0, -0.6, table_height + 0.9);
    let target = Vec3::new(0.0, 0.0, table_height);
    CameraModel::new(
        600.0,
        600.0,
        320.0,
        240.0,
        640,
        480,
        CameraModel::look_at(&eye, &target, &Vec3::z()),
    )
    .expect("desk camera intrinsics are valid")
}

/// One model standing alone at the tabletop origin, rotated by `yaw` about
/// the vertical, with its observation. Used for single-instance evaluation.
#[allow(clippy::too_many_arguments)]
pub fn isolated_instance(
    model: &crate::kinematics::ArticulatedModel,
    camera: &CameraModel,
    table_height: f64,
    joint_states: Vec<f64>,
    scale: f64,
    yaw: f64,
    n_points: usize,
    rng_seed: u64,
) -> crate::Result<(SceneInstance, Observation)> {
    let base = crate::geometry::Rigid::from_parts(
        nalgebra::Translation3::new(0.0, 0.0, table_height),
        crate::geometry::rotation_about(&Vec3::z(), yaw),
    );
    let instance = SceneInstance::annotate(model, base, scale, joint_states, camera)?;
    let obs = sample_observation(&instance, model, camera, n_points, rng_seed)?;
    Ok((instance, obs))
}
