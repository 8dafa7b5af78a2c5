use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::kinematics::{ArticulatedModel, JointType};

use super::camera::{BBox2d, CameraModel};
use super::placement::SceneInstance;

/// Annotated point cloud of one instance in the camera frame. All channels
/// have one entry per point; label 0 is background.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub num_parts: usize,
    pub bbox2d: BBox2d,
    pub points_cam: Vec<Vec3>,
    pub colors: Vec<Vec3>,
    pub gt_labels: Vec<usize>,
    pub gt_nocs: Vec<Vec3>,
    pub gt_joint_loc: Vec<Vec3>,
    pub gt_joint_axis: Vec<Vec3>,
    pub gt_joint_type: Vec<JointType>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.points_cam.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points_cam.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.len();
        let lens = [
            self.colors.len(),
            self.gt_labels.len(),
            self.gt_nocs.len(),
            self.gt_joint_loc.len(),
            self.gt_joint_axis.len(),
            self.gt_joint_type.len(),
        ];
        if lens.iter().any(|&l| l != m) {
            return Err(Error::LengthMismatch(format!(
                "observation channels {lens:?} vs {m} points"
            )));
        }
        if let Some(bad) = self.gt_labels.iter().find(|&&l| l > self.num_parts) {
            return Err(Error::Malformed(format!(
                "label {bad} exceeds part count {}",
                self.num_parts
            )));
        }
        Ok(())
    }
}

/// Constant pseudo-color of a part label.
pub fn part_color(label: usize) -> Vec3 {
    const PALETTE: [[f64; 3]; 8] = [
        [0.5, 0.5, 0.5],
        [0.9, 0.3, 0.2],
        [0.2, 0.6, 0.9],
        [0.3, 0.8, 0.3],
        [0.9, 0.8, 0.2],
        [0.7, 0.3, 0.8],
        [0.2, 0.8, 0.8],
        [0.9, 0.5, 0.7],
    ];
    Vec3::from(PALETTE[label % PALETTE.len()])
}

/// Splits `total` across parts proportionally to `weights` by largest
/// remainder; ties go to the lower part index.
fn allocate(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    let mut counts: Vec<usize> = weights.iter().map(|w| total * w / sum).collect();
    let mut rest: Vec<(usize, usize)> = weights.iter().enumerate().map(|(i, w)| (i, total * w % sum)).collect();
    rest.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let missing = total - counts.iter().sum::<usize>();
    for &(i, _) in rest.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

/// Samples `n_points` model points, poses them with the instance's
/// ground truth and fills every annotation channel. Which rest points are
/// drawn depends only on the model and the seed, never on the joint state.
pub fn sample_observation(
    instance: &SceneInstance,
    model: &ArticulatedModel,
    camera: &CameraModel,
    n_points: usize,
    rng_seed: u64,
) -> Result<Observation> {
    if n_points < 1 {
        return Err(Error::InvalidConfig("n_points must be ≥ 1".into()));
    }
    if instance.part_poses_cam.len() != model.num_parts() {
        return Err(Error::LengthMismatch("instance poses vs model parts".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let weights: Vec<usize> = model.parts().iter().map(|p| p.rest_points.len()).collect();
    let counts = allocate(n_points, &weights);

    let mut obs = Observation {
        num_parts: model.num_parts(),
        bbox2d: BBox2d {
            u1: 0.0,
            v1: 0.0,
            u2: 0.0,
            v2: 0.0,
        },
        points_cam: Vec::with_capacity(n_points),
        colors: Vec::with_capacity(n_points),
        gt_labels: Vec::with_capacity(n_points),
        gt_nocs: Vec::with_capacity(n_points),
        gt_joint_loc: Vec::with_capacity(n_points),
        gt_joint_axis: Vec::with_capacity(n_points),
        gt_joint_type: Vec::with_capacity(n_points),
    };
    for (part, &count) in model.parts().iter().zip(&counts) {
        let available = part.rest_points.len();
        let picks: Vec<usize> = if count <= available {
            sample(&mut rng, available, count).into_vec()
        } else {
            (0..count).map(|_| rng.random_range(0..available)).collect()
        };
        let k = part.index;
        let pose = &instance.part_poses_cam[k - 1];
        let frame = model.nocs_frame(k);
        let joint = &instance.joint_params_cam[k - 1];
        for i in picks {
            let rest = part.rest_points[i];
            obs.points_cam.push(pose.apply(&rest));
            obs.colors.push(part_color(k));
            obs.gt_labels.push(k);
            obs.gt_nocs.push(frame.to_nocs(&rest).map(|v| v.clamp(0.0, 1.0)));
            obs.gt_joint_loc.push(joint.location);
            obs.gt_joint_axis.push(joint.axis);
            obs.gt_joint_type.push(joint.joint_type);
        }
    }
    if !obs.points_cam.iter().any(|p| p.z > 0.0) {
        return Err(Error::BehindCamera);
    }
    obs.bbox2d = BBox2d::of_points(camera, obs.points_cam.iter()).ok_or(Error::OutOfView)?;
    Ok(obs)
}
