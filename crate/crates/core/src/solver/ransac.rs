use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Similarity, Vec3};

use super::umeyama::umeyama;

const MINIMAL_SAMPLE: usize = 4;
const MAX_REFITS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Inlier threshold on `‖dst − T(src)‖` in meters.
    pub inlier_tol_m: f64,
    pub min_inliers: usize,
    pub rng_seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            inlier_tol_m: 0.01,
            min_inliers: 4,
            rng_seed: 0,
        }
    }
}

fn inlier_mask(sim: &Similarity, src: &[Vec3], dst: &[Vec3], tol: f64) -> Vec<bool> {
    let tol2 = tol * tol;
    src.iter()
        .zip(dst)
        .map(|(a, b)| (sim.apply(a) - b).norm_squared() <= tol2)
        .collect()
}

fn select(points: &[Vec3], mask: &[bool]) -> Vec<Vec3> {
    points.iter().zip(mask).filter(|(_, &m)| m).map(|(p, _)| *p).collect()
}

/// Robust similarity fit: four-point minimal hypotheses scored by inlier
/// count, the winner refit on its inliers until the inlier set is stable.
/// Returns the pose and the inlier mask it was fitted on.
pub fn ransac_pose(src: &[Vec3], dst: &[Vec3], cfg: &RansacConfig) -> Result<(Similarity, Vec<bool>)> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch(format!(
            "{} source vs {} target points",
            src.len(),
            dst.len()
        )));
    }
    if cfg.min_inliers < MINIMAL_SAMPLE || !(cfg.inlier_tol_m > 0.0) || cfg.iterations == 0 {
        return Err(Error::InvalidConfig(
            "ransac needs min_inliers ≥ 4, a positive tolerance and ≥ 1 iteration".into(),
        ));
    }
    let n = src.len();
    if cfg.min_inliers > n {
        return Err(Error::InsufficientSupport {
            best: n,
            needed: cfg.min_inliers,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut best: Option<(usize, Vec<bool>)> = None;
    for _ in 0..cfg.iterations {
        let idx = sample(&mut rng, n, MINIMAL_SAMPLE);
        let s: Vec<Vec3> = idx.iter().map(|i| src[i]).collect();
        let d: Vec<Vec3> = idx.iter().map(|i| dst[i]).collect();
        let Ok(hyp) = umeyama(&s, &d) else { continue };
        if !(hyp.scale > 0.0 && hyp.scale.is_finite()) {
            continue;
        }
        let mask = inlier_mask(&hyp, src, dst, cfg.inlier_tol_m);
        let count = mask.iter().filter(|&&m| m).count();
        if best.as_ref().is_none_or(|(c, _)| count > *c) {
            let all = count == n;
            best = Some((count, mask));
            if all {
                break;
            }
        }
    }
    let (count, mut mask) = best.unwrap_or((0, vec![false; n]));
    if count < cfg.min_inliers {
        return Err(Error::InsufficientSupport {
            best: count,
            needed: cfg.min_inliers,
        });
    }
    let mut pose = umeyama(&select(src, &mask), &select(dst, &mask))?;
    for _ in 0..MAX_REFITS {
        let next = inlier_mask(&pose, src, dst, cfg.inlier_tol_m);
        let next_count = next.iter().filter(|&&m| m).count();
        if next == mask || next_count < cfg.min_inliers {
            break;
        }
        let Ok(refit) = umeyama(&select(src, &next), &select(dst, &next)) else {
            break;
        };
        pose = refit;
        mask = next;
    }
    Ok((pose, mask))
}
