//! Stand-in for a learned per-point predictor: corrupts ground-truth
//! channels into a [`PredictionSet`] under a configurable noise model, and
//! scores any prediction set with the weighted multi-task loss.

mod loss;

pub use loss::{multitask_loss, LossBreakdown, LossWeights, CE_FLOOR};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{rotation_about, Vec3};
use crate::kinematics::JointType;
use crate::scenegen::Observation;

/// Half width (meters) of the cube around the true joint location from
/// which outlier location votes are drawn.
pub const LOC_OUTLIER_HALF_WIDTH: f64 = 0.5;

/// Per-point predictions for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    pub seg: Vec<usize>,
    pub nocs: Vec<Vec3>,
    pub joint_loc: Vec<Vec3>,
    pub joint_axis: Vec<Vec3>,
    /// Probabilities over `{Fixed, Prismatic, Revolute}`.
    pub joint_type_probs: Vec<[f64; 3]>,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.seg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seg.is_empty()
    }

    /// Exact copy of the ground-truth channels with one-hot type vectors.
    pub fn from_ground_truth(obs: &Observation) -> PredictionSet {
        PredictionSet {
            seg: obs.gt_labels.clone(),
            nocs: obs.gt_nocs.clone(),
            joint_loc: obs.gt_joint_loc.clone(),
            joint_axis: obs.gt_joint_axis.clone(),
            joint_type_probs: obs.gt_joint_type.iter().map(|t| one_hot(*t)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.len();
        let lens = [
            self.nocs.len(),
            self.joint_loc.len(),
            self.joint_axis.len(),
            self.joint_type_probs.len(),
        ];
        if lens.iter().any(|&l| l != m) {
            return Err(Error::LengthMismatch(format!("prediction channels {lens:?} vs {m}")));
        }
        if let Some(j) = self
            .joint_type_probs
            .iter()
            .position(|p| (p.iter().sum::<f64>() - 1.0).abs() > 1e-6 || p.iter().any(|v| *v < 0.0))
        {
            return Err(Error::Malformed(format!(
                "type probabilities of point {j} are not a distribution"
            )));
        }
        Ok(())
    }

    /// Argmax joint type of point `j`, ties to the earlier class.
    pub fn joint_type(&self, j: usize) -> JointType {
        argmax_type(&self.joint_type_probs[j])
    }

    /// Indices of points labelled `part`.
    pub fn indices_of(&self, part: usize) -> Vec<usize> {
        self.seg
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == part)
            .map(|(j, _)| j)
            .collect()
    }
}

pub fn one_hot(t: JointType) -> [f64; 3] {
    let mut p = [0.0; 3];
    p[t.class_index()] = 1.0;
    p
}

pub(crate) fn argmax_type(p: &[f64; 3]) -> JointType {
    let mut best = 0;
    for c in 1..3 {
        if p[c] > p[best] {
            best = c;
        }
    }
    JointType::ALL[best]
}

/// How joint-head noise is shared between points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadMode {
    /// Separate output channels per part: independent noise on every point.
    #[default]
    ClassAware,
    /// One shared channel for all parts: a single axis and location error
    /// drawn per instance and applied to every point.
    ClassAgnostic,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Gaussian std of NOCS coordinates (NOCS units).
    pub nocs_sigma: f64,
    pub seg_flip_prob: f64,
    /// Fraction of points whose NOCS is replaced by a uniform cube sample.
    pub outlier_frac: f64,
    /// Gaussian std of the axis tilt angle (radians).
    pub axis_angle_sigma: f64,
    /// Gaussian std of joint-location votes (meters).
    pub loc_sigma: f64,
    /// Fraction of points whose joint-location vote is an outlier.
    pub loc_outlier_frac: f64,
    /// Row `i` is the predicted type distribution for true type `i`.
    pub type_confusion: [[f64; 3]; 3],
    pub head_mode: HeadMode,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            nocs_sigma: 0.0,
            seg_flip_prob: 0.0,
            outlier_frac: 0.0,
            axis_angle_sigma: 0.0,
            loc_sigma: 0.0,
            loc_outlier_frac: 0.0,
            type_confusion: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            head_mode: HeadMode::ClassAware,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        let sigma = |v: f64| v >= 0.0 && v.is_finite();
        if !(prob(self.seg_flip_prob) && prob(self.outlier_frac) && prob(self.loc_outlier_frac)) {
            return Err(Error::InvalidConfig("noise probabilities must lie in [0, 1]".into()));
        }
        if !(sigma(self.nocs_sigma) && sigma(self.axis_angle_sigma) && sigma(self.loc_sigma)) {
            return Err(Error::InvalidConfig("noise sigmas must be non-negative".into()));
        }
        for row in &self.type_confusion {
            if row.iter().any(|v| !prob(*v)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig("type confusion rows must be distributions".into()));
            }
        }
        Ok(())
    }
}

// independent random streams per channel so that changing one noise level
// leaves the draws of the others untouched
const STREAM_SEG: u64 = 1;
const STREAM_NOCS: u64 = 2;
const STREAM_AXIS: u64 = 3;
const STREAM_LOC: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian3(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3 {
    let n = Normal::new(0.0, sigma).expect("validated sigma");
    Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng))
}

/// Tilts `axis` by a Gaussian angle about a uniformly random perpendicular.
fn tilt(rng: &mut ChaCha8Rng, axis: &Vec3, sigma: f64) -> Vec3 {
    let angle: f64 = Normal::new(0.0, sigma).expect("validated sigma").sample(rng);
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let perp = v - axis * v.dot(axis);
        if perp.norm() > 1e-6 {
            return (rotation_about(&perp, angle) * axis).normalize();
        }
    }
}

fn outlier_count(m: usize, frac: f64) -> usize {
    ((m as f64 * frac).round() as usize).min(m)
}

/// Corrupts the ground-truth channels of `obs` according to `cfg`.
/// Deterministic for a given seed; an all-zero configuration with identity
/// confusion returns the ground truth exactly.
pub fn perturb(obs: &Observation, cfg: &NoiseConfig, rng_seed: u64) -> Result<PredictionSet> {
    cfg.validate()?;
    obs.validate()?;
    let m = obs.len();
    let mut pred = PredictionSet::from_ground_truth(obs);

    if cfg.seg_flip_prob > 0.0 {
        let mut rng = stream(rng_seed, STREAM_SEG);
        let labels = obs.num_parts + 1;
        for s in pred.seg.iter_mut() {
            if rng.random::<f64>() < cfg.seg_flip_prob {
                let r = rng.random_range(0..labels - 1);
                *s = if r >= *s { r + 1 } else { r };
            }
        }
    }

    let mut rng = stream(rng_seed, STREAM_NOCS);
    if cfg.nocs_sigma > 0.0 {
        for p in pred.nocs.iter_mut() {
            *p += gaussian3(&mut rng, cfg.nocs_sigma);
        }
    }
    let n_out = outlier_count(m, cfg.outlier_frac);
    if n_out > 0 {
        for j in sample(&mut rng, m, n_out) {
            pred.nocs[j] = Vec3::new(rng.random(), rng.random(), rng.random());
        }
    }

    let shared = cfg.head_mode == HeadMode::ClassAgnostic;
    if cfg.axis_angle_sigma > 0.0 {
        let mut rng = stream(rng_seed, STREAM_AXIS);
        if shared {
            let angle: f64 = Normal::new(0.0, cfg.axis_angle_sigma)
                .expect("validated")
                .sample(&mut rng);
            let dir = Vec3::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            );
            for u in pred.joint_axis.iter_mut() {
                let perp = dir - *u * dir.dot(u);
                if perp.norm() > 1e-9 {
                    *u = (rotation_about(&perp, angle) * *u).normalize();
                }
            }
        } else {
            for u in pred.joint_axis.iter_mut() {
                *u = tilt(&mut rng, u, cfg.axis_angle_sigma);
            }
        }
    }

    let mut rng = stream(rng_seed, STREAM_LOC);
    if cfg.loc_sigma > 0.0 {
        if shared {
            let offset = gaussian3(&mut rng, cfg.loc_sigma);
            pred.joint_loc.iter_mut().for_each(|q| *q += offset);
        } else {
            for q in pred.joint_loc.iter_mut() {
                *q += gaussian3(&mut rng, cfg.loc_sigma);
            }
        }
    }
    let n_loc_out = outlier_count(m, cfg.loc_outlier_frac);
    if n_loc_out > 0 {
        let h = LOC_OUTLIER_HALF_WIDTH;
        for j in sample(&mut rng, m, n_loc_out) {
            pred.joint_loc[j] = obs.gt_joint_loc[j]
                + Vec3::new(
                    rng.random_range(-h..h),
                    rng.random_range(-h..h),
                    rng.random_range(-h..h),
                );
        }
    }

    for (p, t) in pred.joint_type_probs.iter_mut().zip(&obs.gt_joint_type) {
        *p = cfg.type_confusion[t.class_index()];
    }
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegen::BBox2d;

    /// Synthetic observation with `m` points over `k` parts.
    pub(crate) fn toy_observation(m: usize, k: usize) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let labels: Vec<usize> = (0..m).map(|j| 1 + j % k).collect();
        Observation {
            num_parts: k,
            bbox2d: BBox2d {
                u1: 0.0,
                v1: 0.0,
                u2: 1.0,
                v2: 1.0,
            },
            points_cam: (0..m)
                .map(|_| Vec3::new(rng.random(), rng.random(), 1.0 + rng.random::<f64>()))
                .collect(),
            colors: vec![Vec3::repeat(0.5); m],
            gt_nocs: (0..m)
                .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
                .collect(),
            gt_joint_loc: labels.iter().map(|&l| Vec3::new(0.1 * l as f64, 0.0, 1.0)).collect(),
            gt_joint_axis: labels.iter().map(|_| Vec3::z()).collect(),
            gt_joint_type: labels
                .iter()
                .map(|&l| if l == 1 { JointType::Fixed } else { JointType::Revolute })
                .collect(),
            gt_labels: labels,
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let obs = toy_observation(500, 3);
        let pred = perturb(&obs, &NoiseConfig::default(), 42).unwrap();
        assert_eq!(pred, PredictionSet::from_ground_truth(&obs));
        assert_eq!(pred.seg, obs.gt_labels);
        assert_eq!(pred.nocs, obs.gt_nocs);
    }

    #[test]
    fn seg_flip_rate() {
        let obs = toy_observation(10_000, 3);
        let cfg = NoiseConfig {
            seg_flip_prob: 0.3,
            ..Default::default()
        };
        let pred = perturb(&obs, &cfg, 5).unwrap();
        let flips = pred.seg.iter().zip(&obs.gt_labels).filter(|(a, b)| a != b).count();
        let frac = flips as f64 / 10_000.0;
        assert!((0.28..=0.32).contains(&frac), "flip fraction {frac}");
        assert!(pred.seg.iter().all(|&s| s <= 3));
    }

    #[test]
    fn nocs_noise_std() {
        let obs = toy_observation(100_000, 2);
        let cfg = NoiseConfig {
            nocs_sigma: 0.02,
            ..Default::default()
        };
        let pred = perturb(&obs, &cfg, 5).unwrap();
        for axis in 0..3 {
            let d: Vec<f64> = pred
                .nocs
                .iter()
                .zip(&obs.gt_nocs)
                .map(|(p, g)| p[axis] - g[axis])
                .collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
            let std = var.sqrt();
            assert!((0.019..=0.021).contains(&std), "std {std}");
        }
    }

    #[test]
    fn outlier_fraction_is_exact() {
        let obs = toy_observation(1000, 2);
        let cfg = NoiseConfig {
            outlier_frac: 0.3,
            loc_outlier_frac: 0.1,
            ..Default::default()
        };
        let pred = perturb(&obs, &cfg, 9).unwrap();
        let changed = pred.nocs.iter().zip(&obs.gt_nocs).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 300);
        let moved = pred
            .joint_loc
            .iter()
            .zip(&obs.gt_joint_loc)
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(moved, 100);
    }

    #[test]
    fn axis_tilt_keeps_unit_length() {
        let obs = toy_observation(2000, 2);
        let cfg = NoiseConfig {
            axis_angle_sigma: 0.05,
            ..Default::default()
        };
        let pred = perturb(&obs, &cfg, 3).unwrap();
        let mut sq = 0.0;
        for (u, g) in pred.joint_axis.iter().zip(&obs.gt_joint_axis) {
            assert!((u.norm() - 1.0).abs() < 1e-12);
            sq += u.dot(g).clamp(-1.0, 1.0).acos().powi(2);
        }
        let rms = (sq / 2000.0).sqrt();
        assert!((rms - 0.05).abs() < 0.005, "rms tilt {rms}");
    }

    #[test]
    fn class_agnostic_shares_one_draw() {
        let obs = toy_observation(300, 2);
        let cfg = NoiseConfig {
            loc_sigma: 0.01,
            head_mode: HeadMode::ClassAgnostic,
            ..Default::default()
        };
        let pred = perturb(&obs, &cfg, 3).unwrap();
        let offsets: Vec<Vec3> = pred
            .joint_loc
            .iter()
            .zip(&obs.gt_joint_loc)
            .map(|(p, g)| p - g)
            .collect();
        assert!(offsets.iter().all(|o| (o - offsets[0]).norm() < 1e-12));
        assert!(offsets[0].norm() > 0.0);
    }

    #[test]
    fn confusion_rows_become_probabilities() {
        let obs = toy_observation(10, 2);
        let cfg = NoiseConfig {
            type_confusion: [[0.8, 0.1, 0.1], [0.0, 1.0, 0.0], [0.2, 0.2, 0.6]],
            ..Default::default()
        };
        let pred = perturb(&obs, &cfg, 0).unwrap();
        pred.validate().unwrap();
        assert_eq!(pred.joint_type_probs[0], [0.8, 0.1, 0.1]);
        assert_eq!(pred.joint_type_probs[1], [0.2, 0.2, 0.6]);
    }

    #[test]
    fn invalid_config() {
        let obs = toy_observation(10, 2);
        let cfg = NoiseConfig {
            seg_flip_prob: 1.5,
            ..Default::default()
        };
        assert!(perturb(&obs, &cfg, 0).is_err());
        let cfg = NoiseConfig {
            type_confusion: [[0.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            ..Default::default()
        };
        assert!(perturb(&obs, &cfg, 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let obs = toy_observation(200, 2);
        let cfg = NoiseConfig {
            nocs_sigma: 0.01,
            seg_flip_prob: 0.1,
            outlier_frac: 0.1,
            axis_angle_sigma: 0.1,
            loc_sigma: 0.01,
            ..Default::default()
        };
        assert_eq!(perturb(&obs, &cfg, 8).unwrap(), perturb(&obs, &cfg, 8).unwrap());
        assert_ne!(perturb(&obs, &cfg, 8).unwrap(), perturb(&obs, &cfg, 9).unwrap());
    }
}
