use crate::error::{Error, Result};
use crate::scenegen::Observation;

use super::PredictionSet;

/// Probability assigned to non-predicted classes when a hard label is
/// expanded into a distribution for the cross-entropy term.
pub const CE_FLOOR: f64 = 1e-6;

/// Weights of the segmentation, NOCS, location, axis and type terms.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossWeights {
    pub seg: f64,
    pub nocs: f64,
    pub loc: f64,
    pub axis: f64,
    pub joint_type: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            seg: 1.0,
            nocs: 10.0,
            loc: 1.0,
            axis: 0.5,
            joint_type: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub seg: f64,
    pub nocs: f64,
    pub loc: f64,
    pub axis: f64,
    pub joint_type: f64,
    pub total: f64,
}

/// Soft IoU of two distributions: `Σ p·g / Σ (p + g − p·g)`.
fn soft_iou(p: &[f64; 3], g: &[f64; 3]) -> f64 {
    let inter: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    let union: f64 = p.iter().zip(g).map(|(a, b)| a + b - a * b).sum();
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Weighted multi-task loss. Segmentation cross-entropy runs over every
/// point; the NOCS, joint-location, joint-axis and joint-type terms only
/// count points whose ground-truth label is foreground.
///
/// Hard predicted labels are expanded to a one-hot distribution whose zero
/// entries are raised to [`CE_FLOOR`], so a correct label costs 0 and a
/// wrong one `−ln CE_FLOOR`.
pub fn multitask_loss(pred: &PredictionSet, obs: &Observation, w: &LossWeights) -> Result<LossBreakdown> {
    if pred.len() != obs.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} observed points",
            pred.len(),
            obs.len()
        )));
    }
    pred.validate()?;
    let wrong_label = -CE_FLOOR.ln();
    let mut out = LossBreakdown {
        seg: 0.0,
        nocs: 0.0,
        loc: 0.0,
        axis: 0.0,
        joint_type: 0.0,
        total: 0.0,
    };
    for j in 0..obs.len() {
        let gt = obs.gt_labels[j];
        if pred.seg[j] != gt {
            out.seg += wrong_label;
        }
        if gt == 0 {
            continue;
        }
        out.nocs += (pred.nocs[j] - obs.gt_nocs[j]).norm();
        out.loc += (pred.joint_loc[j] - obs.gt_joint_loc[j]).norm();
        out.axis += (pred.joint_axis[j] - obs.gt_joint_axis[j]).norm();
        let g = super::one_hot(obs.gt_joint_type[j]);
        out.joint_type += 1.0 - soft_iou(&pred.joint_type_probs[j], &g);
    }
    out.total =
        w.seg * out.seg + w.nocs * out.nocs + w.loc * out.loc + w.axis * out.axis + w.joint_type * out.joint_type;
    Ok(out)
}
