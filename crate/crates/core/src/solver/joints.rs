use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::kinematics::JointType;
use crate::oracle::{argmax_type, PredictionSet};

/// Joint recovered for one part, camera frame.
#[derive(Clone, Debug, PartialEq)]
pub struct JointEstimate {
    pub joint_type: JointType,
    pub axis: Vec3,
    pub location: Vec3,
    /// Fraction of the part's points that support the estimate.
    pub confidence: f64,
}

fn part_indices(pred: &PredictionSet, part: usize) -> Result<Vec<usize>> {
    let idx = pred.indices_of(part);
    if idx.is_empty() {
        Err(Error::EmptySelection(part))
    } else {
        Ok(idx)
    }
}

/// Votes considered as hemisphere reference.
const REFERENCE_CANDIDATES: usize = 256;

/// The vote most aligned, up to sign, with all votes of the part; earliest
/// wins ties. A single stray vote can then not decide the hemisphere.
fn reference_vote(votes: &[Vec3]) -> Vec3 {
    let mut best = (f64::NEG_INFINITY, votes[0]);
    for cand in votes.iter().take(REFERENCE_CANDIDATES) {
        let score: f64 = votes.iter().map(|u| u.dot(cand).abs()).sum();
        if score > best.0 {
            best = (score, *cand);
        }
    }
    best.1
}

/// Mean of the per-point axes of part `part`, renormalized.
///
/// Votes are first flipped into the hemisphere of a reference vote so that
/// antipodal predictions of the same line do not cancel.
pub fn aggregate_joint_axis(pred: &PredictionSet, part: usize) -> Result<Vec3> {
    let idx = part_indices(pred, part)?;
    let votes: Vec<Vec3> = idx.iter().map(|&j| pred.joint_axis[j]).collect();
    let reference = reference_vote(&votes);
    let sum: Vec3 = votes
        .iter()
        .map(|&u| if u.dot(&reference) < 0.0 { -u } else { u })
        .sum();
    let mean = sum / idx.len() as f64;
    let norm = mean.norm();
    if !(norm >= 1e-9) {
        return Err(Error::IllConditionedAxis(part));
    }
    Ok(mean / norm)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Coordinate-wise median of the per-point joint-location votes of part
/// `part`. With an `anchor` (typically the part centroid), the returned
/// point is the anchor's projection onto the joint line through the median
/// along `axis`, since a pivot is only defined up to sliding along its axis.
pub fn vote_joint_location(pred: &PredictionSet, part: usize, axis: &Vec3, anchor: Option<&Vec3>) -> Result<Vec3> {
    let idx = part_indices(pred, part)?;
    let mut coords: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(idx.len()));
    for &j in &idx {
        for (c, values) in coords.iter_mut().enumerate() {
            values.push(pred.joint_loc[j][c]);
        }
    }
    let m = Vec3::new(median(&mut coords[0]), median(&mut coords[1]), median(&mut coords[2]));
    Ok(match anchor {
        Some(a) => m + axis * (a - m).dot(axis),
        None => m,
    })
}

/// Argmax of the summed type distributions of part `part`; exact ties
/// resolve Fixed before Prismatic before Revolute.
pub fn classify_joint_type(pred: &PredictionSet, part: usize) -> Result<JointType> {
    let idx = part_indices(pred, part)?;
    let mut sum = [0.0; 3];
    for &j in &idx {
        for (acc, p) in sum.iter_mut().zip(pred.joint_type_probs[j]) {
            *acc += p;
        }
    }
    Ok(argmax_type(&sum))
}

/// Distance from `p` to the line through `origin` along unit `axis`.
pub fn point_line_distance(p: &Vec3, origin: &Vec3, axis: &Vec3) -> f64 {
    let d = p - origin;
    (d - axis * d.dot(axis)).norm()
}
