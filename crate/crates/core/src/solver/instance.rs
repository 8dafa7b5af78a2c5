use crate::error::{Error, Result};
use crate::geometry::{Similarity, Vec3};
use crate::kinematics::NocsFrame;
use crate::oracle::PredictionSet;

use super::joints::{aggregate_joint_axis, classify_joint_type, vote_joint_location, JointEstimate};
use super::ransac::{ransac_pose, RansacConfig};
use super::refine::{constrained_refine, KinematicEdge, PartCorrespondence, RefineConfig, RefineReport, RefineStatus};
use super::umeyama::{residual_rms, umeyama};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub ransac: RansacConfig,
    /// Parts with fewer assigned points are reported absent. Never below 3.
    pub min_points: usize,
    /// `None` skips the constrained stage.
    pub refine: Option<RefineConfig>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ransac: RansacConfig::default(),
            min_points: 3,
            refine: Some(RefineConfig::default()),
        }
    }
}

/// Non-fatal conditions met while solving one instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EstimateFlag {
    /// Too few points were segmented to this part.
    PartAbsent(usize),
    /// Pose fitting failed (degenerate or unsupported).
    PoseFailed(usize),
    /// The joint axis of this part could not be aggregated.
    JointFailed(usize),
    NoConstraints,
    RefineNotConverged,
}

impl std::fmt::Display for EstimateFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimateFlag::PartAbsent(k) => write!(f, "part_absent:{k}"),
            EstimateFlag::PoseFailed(k) => write!(f, "pose_failed:{k}"),
            EstimateFlag::JointFailed(k) => write!(f, "joint_failed:{k}"),
            EstimateFlag::NoConstraints => f.write_str("no_constraints"),
            EstimateFlag::RefineNotConverged => f.write_str("refine_not_converged"),
        }
    }
}

/// Per-part recovery of one instance; slot `k-1` holds part `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceEstimate {
    pub part_poses: Vec<Option<Similarity>>,
    /// Poses of the unconstrained stage, each with its own scale.
    pub initial_poses: Vec<Option<Similarity>>,
    pub joints: Vec<Option<JointEstimate>>,
    /// Observation indices segmented to each part.
    pub part_points: Vec<Vec<usize>>,
    /// Inlier mask over `part_points`.
    pub part_inliers: Vec<Vec<bool>>,
    /// RMS fit residual over inliers, meters.
    pub residuals: Vec<Option<f64>>,
    pub flags: Vec<EstimateFlag>,
    pub refine: Option<RefineReport>,
}

impl InstanceEstimate {
    pub fn num_parts(&self) -> usize {
        self.part_poses.len()
    }

    pub fn inlier_count(&self, part: usize) -> usize {
        self.part_inliers[part - 1].iter().filter(|&&m| m).count()
    }
}

fn correspondences(pred: &PredictionSet, points_cam: &[Vec3], frame: &NocsFrame, idx: &[usize]) -> PartCorrespondence {
    PartCorrespondence {
        src: idx.iter().map(|&j| frame.from_nocs(&pred.nocs[j])).collect(),
        dst: idx.iter().map(|&j| points_cam[j]).collect(),
    }
}

fn masked(corr: &PartCorrespondence, mask: &[bool]) -> PartCorrespondence {
    let keep = |v: &[Vec3]| v.iter().zip(mask).filter(|(_, &m)| m).map(|(p, _)| *p).collect();
    PartCorrespondence {
        src: keep(&corr.src),
        dst: keep(&corr.dst),
    }
}

/// Recovers all part poses and joints of one instance.
///
/// Each part's predicted NOCS is mapped back to rest coordinates through
/// its frame and aligned to the camera points by RANSAC (plain least
/// squares when the part has fewer points than `min_inliers`). Joint
/// estimates aggregate the per-point heads. Finally the poses are refined
/// jointly under the constraints of the kinematic `edges`.
pub fn solve_instance(
    pred: &PredictionSet,
    points_cam: &[Vec3],
    frames: &[NocsFrame],
    edges: &[KinematicEdge],
    cfg: &SolverConfig,
) -> Result<InstanceEstimate> {
    if pred.len() != points_cam.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} points",
            pred.len(),
            points_cam.len()
        )));
    }
    pred.validate()?;
    let k_parts = frames.len();
    let min_points = cfg.min_points.max(3);

    let mut est = InstanceEstimate {
        part_poses: vec![None; k_parts],
        initial_poses: vec![None; k_parts],
        joints: vec![None; k_parts],
        part_points: Vec::with_capacity(k_parts),
        part_inliers: Vec::with_capacity(k_parts),
        residuals: vec![None; k_parts],
        flags: Vec::new(),
        refine: None,
    };
    let mut data: Vec<Option<PartCorrespondence>> = vec![None; k_parts];

    for k in 1..=k_parts {
        let idx = pred.indices_of(k);
        let corr = correspondences(pred, points_cam, &frames[k - 1], &idx);
        let mut mask = vec![false; idx.len()];
        if idx.len() < min_points {
            est.flags.push(EstimateFlag::PartAbsent(k));
        } else {
            let fit = if idx.len() < cfg.ransac.min_inliers {
                umeyama(&corr.src, &corr.dst).map(|s| (s, vec![true; idx.len()]))
            } else {
                let part_cfg = RansacConfig {
                    rng_seed: cfg.ransac.rng_seed.wrapping_add(k as u64),
                    ..cfg.ransac
                };
                ransac_pose(&corr.src, &corr.dst, &part_cfg)
            };
            match fit {
                Ok((pose, m)) => {
                    let inliers = masked(&corr, &m);
                    est.residuals[k - 1] = Some(residual_rms(&pose, &inliers.src, &inliers.dst));
                    est.initial_poses[k - 1] = Some(pose);
                    data[k - 1] = Some(inliers);
                    mask = m;
                }
                Err(_) => est.flags.push(EstimateFlag::PoseFailed(k)),
            }
        }

        if !idx.is_empty() {
            match aggregate_joint_axis(pred, k) {
                Ok(axis) => {
                    let support: Vec<&Vec3> = if mask.iter().any(|&m| m) {
                        corr.dst.iter().zip(&mask).filter(|(_, &m)| m).map(|(p, _)| p).collect()
                    } else {
                        corr.dst.iter().collect()
                    };
                    let centroid = support.iter().copied().sum::<Vec3>() / support.len() as f64;
                    let location = vote_joint_location(pred, k, &axis, Some(&centroid))?;
                    let confidence = mask.iter().filter(|&&m| m).count() as f64 / idx.len() as f64;
                    est.joints[k - 1] = Some(JointEstimate {
                        joint_type: classify_joint_type(pred, k)?,
                        axis,
                        location,
                        confidence,
                    });
                }
                Err(_) => est.flags.push(EstimateFlag::JointFailed(k)),
            }
        }
        est.part_points.push(idx);
        est.part_inliers.push(mask);
    }

    if est.initial_poses.iter().all(Option::is_none) {
        return Err(Error::NothingRecovered);
    }
    est.part_poses = est.initial_poses.clone();

    if let Some(refine_cfg) = &cfg.refine {
        let (poses, report) = constrained_refine(&est.initial_poses, &est.joints, edges, &data, refine_cfg);
        match report.status {
            RefineStatus::NoConstraints => est.flags.push(EstimateFlag::NoConstraints),
            RefineStatus::NotConverged => est.flags.push(EstimateFlag::RefineNotConverged),
            RefineStatus::Converged => {}
        }
        for (k, pose) in poses.iter().enumerate() {
            if let (Some(p), Some(d)) = (pose, &data[k]) {
                est.residuals[k] = Some(residual_rms(p, &d.src, &d.dst));
            }
        }
        est.part_poses = poses;
        est.refine = Some(report);
    }
    Ok(est)
}
