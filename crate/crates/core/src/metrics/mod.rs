//! Pose evaluation: rotation and translation errors, oriented-box IoU,
//! instance association, threshold-swept average precision and
//! single-instance pose accuracy.
//!
//! Rates are percentages over ground-truth parts. A ground-truth part with
//! no matched estimate fails every threshold.

mod iou;
mod report;

pub use iou::{intersection_volume, iou3d};
pub use report::{EvalReport, ReportRow, REPORT_COLUMNS};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_angle, is_rotation, Similarity};
use crate::kinematics::ArticulatedModel;
use crate::scenegen::{BBox2d, SceneInstance};

/// Orthogonality tolerance for inputs of [`rotation_error`].
pub const ROTATION_TOLERANCE: f64 = 1e-6;

/// Geodesic distance between two rotations in degrees, in `[0, 180]`.
pub fn rotation_error(a: &Matrix3<f64>, b: &Matrix3<f64>) -> Result<f64> {
    if !is_rotation(a, ROTATION_TOLERANCE) || !is_rotation(b, ROTATION_TOLERANCE) {
        return Err(Error::NotARotation);
    }
    Ok(geodesic_angle(a, b).to_degrees().clamp(0.0, 180.0))
}

/// Evaluation outcome of one ground-truth part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartMatchRecord {
    pub scene: usize,
    pub instance: usize,
    pub category: String,
    pub part: usize,
    pub rot_err_deg: f64,
    pub trans_err_m: f64,
    pub iou3d: f64,
    /// False when the instance or the part went unrecovered.
    pub matched: bool,
}

impl PartMatchRecord {
    pub fn unmatched(scene: usize, instance: usize, category: &str, part: usize) -> Self {
        Self {
            scene,
            instance,
            category: category.to_string(),
            part,
            rot_err_deg: 180.0,
            trans_err_m: f64::INFINITY,
            iou3d: 0.0,
            matched: false,
        }
    }

    fn sort_key(&self) -> (usize, usize, usize) {
        (self.scene, self.instance, self.part)
    }
}

/// Orders records by scene, instance and part so that reductions do not
/// depend on completion order.
pub fn sort_records(records: &mut [PartMatchRecord]) {
    records.sort_by_key(PartMatchRecord::sort_key);
}

/// Compares an estimate of every part of `gt` with the ground truth.
/// `estimate[k-1]` is the pose of part `k`; part boxes are the rest-state
/// tight box carried by each pose.
pub fn part_records(
    scene: usize,
    instance: usize,
    model: &ArticulatedModel,
    gt: &SceneInstance,
    estimate: Option<&[Option<Similarity>]>,
) -> Result<Vec<PartMatchRecord>> {
    let mut out = Vec::with_capacity(model.num_parts());
    for (slot, part) in model.parts().iter().enumerate() {
        let k = part.index;
        let est = estimate.and_then(|e| e.get(slot)).and_then(Option::as_ref);
        let Some(est) = est else {
            out.push(PartMatchRecord::unmatched(scene, instance, model.category(), k));
            continue;
        };
        let truth = &gt.part_poses_cam[slot];
        let rest = part.rest_box()?;
        out.push(PartMatchRecord {
            scene,
            instance,
            category: model.category().to_string(),
            part: k,
            rot_err_deg: rotation_error(est.rotation.matrix(), truth.rotation.matrix())?,
            trans_err_m: (est.translation - truth.translation).norm(),
            iou3d: iou3d(&rest.transformed(est), &rest.transformed(truth))?,
            matched: true,
        });
    }
    Ok(out)
}

/// One-to-one association of predicted and ground-truth instances.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Association {
    /// `(prediction, ground truth)` index pairs.
    pub pairs: Vec<(usize, usize)>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
}

impl Association {
    pub fn prediction_for(&self, gt: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == gt).map(|p| p.0)
    }
}

/// Greedy matching by descending 2D box IoU; pairs below `threshold` are
/// never matched. Equal IoUs resolve by lower prediction, then lower ground
/// truth index.
pub fn match_instances(pred: &[BBox2d], gt: &[BBox2d], threshold: f64) -> Association {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let iou = p.iou(g);
            if iou >= threshold && iou > 0.0 {
                candidates.push((iou, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; pred.len()];
    let mut used_g = vec![false; gt.len()];
    let mut out = Association::default();
    for (_, i, j) in candidates {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            out.pairs.push((i, j));
        }
    }
    out.pairs.sort_unstable();
    out.false_positives = (0..pred.len()).filter(|&i| !used_p[i]).collect();
    out.false_negatives = (0..gt.len()).filter(|&j| !used_g[j]).collect();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Rot,
    Trans,
    Iou,
}

impl ErrorKind {
    /// Whether `record` passes threshold `tau`: strictly below for errors,
    /// at or above for IoU.
    pub fn passes(self, record: &PartMatchRecord, tau: f64) -> bool {
        record.matched
            && match self {
                ErrorKind::Rot => record.rot_err_deg < tau,
                ErrorKind::Trans => record.trans_err_m < tau,
                ErrorKind::Iou => record.iou3d >= tau,
            }
    }
}

/// AP at each threshold and their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct ApCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    pub averaged: f64,
}

fn rate(records: &[PartMatchRecord], kind: ErrorKind, tau: f64) -> f64 {
    let hits = records.iter().filter(|r| kind.passes(r, tau)).count();
    100.0 * hits as f64 / records.len() as f64
}

/// Percentage of ground-truth parts passing each threshold.
pub fn average_precision(records: &[PartMatchRecord], kind: ErrorKind, thresholds: &[f64]) -> Result<ApCurve> {
    if records.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    if thresholds.is_empty() {
        return Err(Error::InvalidConfig("empty threshold grid".into()));
    }
    let values: Vec<f64> = thresholds.iter().map(|&t| rate(records, kind, t)).collect();
    let averaged = values.iter().sum::<f64>() / values.len() as f64;
    Ok(ApCurve {
        thresholds: thresholds.to_vec(),
        values,
        averaged,
    })
}

/// Threshold grids for the averaged AP columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricGrids {
    pub rot_deg: Vec<f64>,
    pub trans_m: Vec<f64>,
    pub iou: Vec<f64>,
}

impl Default for MetricGrids {
    fn default() -> Self {
        Self {
            rot_deg: (1..=10).map(f64::from).collect(),
            trans_m: (1..=10).map(|c| f64::from(c) / 100.0).collect(),
            iou: (0..=4).map(|i| f64::from(50 + 5 * i) / 100.0).collect(),
        }
    }
}

/// Single-instance pose accuracy at 10°, 10 cm and IoU 0.7, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseAccuracy {
    pub rot_10: f64,
    pub trans_10cm: f64,
    pub iou_07: f64,
}

pub fn pose_accuracy(records: &[PartMatchRecord]) -> Result<PoseAccuracy> {
    if records.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    Ok(PoseAccuracy {
        rot_10: rate(records, ErrorKind::Rot, 10.0),
        trans_10cm: rate(records, ErrorKind::Trans, 0.10),
        iou_07: rate(records, ErrorKind::Iou, 0.7),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rotation_about, Vec3};
    use nalgebra::{Rotation3, UnitQuaternion};
    use proptest::prelude::*;

    pub(crate) fn rec(rot: f64, trans: f64, iou: f64, matched: bool) -> PartMatchRecord {
        PartMatchRecord {
            scene: 0,
            instance: 0,
            category: "c".into(),
            part: 1,
            rot_err_deg: rot,
            trans_err_m: trans,
            iou3d: iou,
            matched,
        }
    }

    #[test]
    fn rotation_error_basics() {
        let i = Matrix3::identity();
        assert_eq!(rotation_error(&i, &i).unwrap(), 0.0);
        let rz = rotation_about(&Vec3::z(), std::f64::consts::FRAC_PI_2);
        assert!((rotation_error(&i, rz.matrix()).unwrap() - 90.0).abs() < 1e-12);
        assert!(matches!(rotation_error(&(i * 1.1), &i), Err(Error::NotARotation)));
    }

    #[test]
    fn rotation_error_matches_quaternion_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let qa = UnitQuaternion::from_quaternion(nalgebra::Quaternion::<f64>::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ));
            let qb = UnitQuaternion::from_quaternion(nalgebra::Quaternion::<f64>::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ));
            let oracle = (2.0 * qa.coords.dot(&qb.coords).abs().min(1.0).acos()).to_degrees();
            let e = rotation_error(qa.to_rotation_matrix().matrix(), qb.to_rotation_matrix().matrix()).unwrap();
            assert!((e - oracle).abs() < 1e-9, "{e} vs {oracle}");
        }
    }

    #[test]
    fn ap_all_exact_and_half_missing() {
        let exact = vec![rec(0.0, 0.0, 1.0, true); 4];
        for kind in [ErrorKind::Rot, ErrorKind::Trans, ErrorKind::Iou] {
            let grid = match kind {
                ErrorKind::Iou => MetricGrids::default().iou,
                _ => MetricGrids::default().rot_deg,
            };
            let c = average_precision(&exact, kind, &grid).unwrap();
            assert!(c.values.iter().all(|&v| v == 100.0));
            let mut half = exact.clone();
            half[0] = PartMatchRecord::unmatched(0, 0, "c", 1);
            half[1] = PartMatchRecord::unmatched(0, 0, "c", 2);
            let c = average_precision(&half, kind, &grid).unwrap();
            assert!(c.values.iter().all(|&v| v == 50.0));
            assert_eq!(c.averaged, 50.0);
        }
    }

    #[test]
    fn ap_step_function() {
        let rs: Vec<PartMatchRecord> = [2.0, 4.0, 7.0, 12.0].iter().map(|&e| rec(e, 0.0, 1.0, true)).collect();
        let grid = MetricGrids::default().rot_deg;
        let c = average_precision(&rs, ErrorKind::Rot, &grid).unwrap();
        assert_eq!(c.values[4], 50.0);
        assert_eq!(c.values[9], 75.0);
        // strict comparison: passes at τ = 1..10 are 0,0,1,1,2,2,2,3,3,3 of 4
        let by_hand = [0.0, 0.0, 25.0, 25.0, 50.0, 50.0, 50.0, 75.0, 75.0, 75.0];
        assert_eq!(c.values, by_hand);
        assert!((c.averaged - 42.5).abs() < 1e-12);
    }

    #[test]
    fn empty_ground_truth() {
        assert!(matches!(
            average_precision(&[], ErrorKind::Rot, &[5.0]),
            Err(Error::EmptyGroundTruth)
        ));
        assert!(pose_accuracy(&[]).is_err());
    }

    #[test]
    fn grids() {
        let g = MetricGrids::default();
        assert_eq!(g.trans_m[4], 0.05);
        assert_eq!(g.trans_m[9], 0.10);
        assert_eq!(g.iou, vec![0.5, 0.55, 0.6, 0.65, 0.7]);
    }

    #[test]
    fn cape_accuracy() {
        assert_eq!(
            pose_accuracy(&vec![rec(0.0, 0.0, 1.0, true); 3]).unwrap(),
            PoseAccuracy {
                rot_10: 100.0,
                trans_10cm: 100.0,
                iou_07: 100.0
            }
        );
        let a = pose_accuracy(&[rec(15.0, 0.0, 0.9, true), rec(0.0, 0.0, 1.0, true)]).unwrap();
        assert_eq!((a.rot_10, a.trans_10cm), (50.0, 100.0));
    }

    fn b(u: f64, v: f64) -> BBox2d {
        BBox2d {
            u1: u,
            v1: v,
            u2: u + 10.0,
            v2: v + 10.0,
        }
    }

    #[test]
    fn matching() {
        let gt = vec![b(0.0, 0.0), b(100.0, 0.0)];
        let m = match_instances(&gt, &gt, 0.5);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        let far = vec![b(500.0, 500.0), b(700.0, 700.0)];
        let m = match_instances(&far, &gt, 0.5);
        assert!(m.pairs.is_empty());
        assert_eq!((m.false_positives.len(), m.false_negatives.len()), (2, 2));
        let three = vec![b(100.0, 0.0), b(300.0, 300.0), b(0.0, 0.0)];
        let m = match_instances(&three, &gt, 0.5);
        assert_eq!(m.pairs, vec![(0, 1), (2, 0)]);
        assert_eq!(m.false_positives, vec![1]);
        assert_eq!(m.prediction_for(0), Some(2));
    }

    proptest! {
        #[test]
        fn ap_is_monotone(errs in prop::collection::vec((0.0f64..20.0, 0.0f64..0.2, 0.0f64..1.0, any::<bool>()), 1..40)) {
            let rs: Vec<PartMatchRecord> = errs.iter().map(|e| rec(e.0, e.1, e.2, e.3)).collect();
            let g = MetricGrids::default();
            for (kind, grid, up) in [(ErrorKind::Rot, &g.rot_deg, true), (ErrorKind::Trans, &g.trans_m, true), (ErrorKind::Iou, &g.iou, false)] {
                let c = average_precision(&rs, kind, grid).unwrap();
                for w in c.values.windows(2) {
                    let ordered = if up { w[1] >= w[0] } else { w[1] <= w[0] };
                    prop_assert!(ordered);
                }
                prop_assert!(c.values.iter().all(|v| (0.0..=100.0).contains(v)));
            }
        }

        #[test]
        fn rotation_error_is_a_metric(seed in 0u64..100_000) {
            use rand::SeedableRng;
            use rand_distr::{Distribution, StandardNormal};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || {
                let v = Vec3::from_fn(|_, _| StandardNormal.sample(&mut rng));
                Rotation3::new(v).into_inner()
            };
            let (a, b, c) = (draw(), draw(), draw());
            let ab = rotation_error(&a, &b).unwrap();
            prop_assert!((ab - rotation_error(&b, &a).unwrap()).abs() < 1e-6);
            prop_assert!(rotation_error(&a, &c).unwrap() <= ab + rotation_error(&b, &c).unwrap() + 1e-6);
            prop_assert!((0.0..=180.0).contains(&ab));
        }
    }
}
