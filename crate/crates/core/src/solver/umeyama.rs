use nalgebra::{Matrix3, Rotation3};

use crate::error::{Error, Result};
use crate::geometry::{Similarity, Vec3};

/// Relative size of the second principal extent of `src` below which the
/// correspondence is treated as rank-deficient.
const RANK_EPS: f64 = 1e-10;

/// Closed-form least-squares similarity `dst ≈ s·R·src + t`.
///
/// The cross-covariance is decomposed by SVD; when `det(U)·det(V) < 0` the
/// singular vector of the smallest singular value is flipped so that
/// `det R = +1`. Fails when `src` has fewer than three points or spans less
/// than a plane.
pub fn umeyama(src: &[Vec3], dst: &[Vec3]) -> Result<Similarity> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch(format!(
            "{} source vs {} target points",
            src.len(),
            dst.len()
        )));
    }
    let n = src.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: n });
    }
    let inv_n = 1.0 / n as f64;
    let mu_src = src.iter().sum::<Vec3>() * inv_n;
    let mu_dst = dst.iter().sum::<Vec3>() * inv_n;

    let mut cov = Matrix3::zeros();
    let mut scatter = Matrix3::zeros();
    let mut var_src = 0.0;
    for (a, b) in src.iter().zip(dst) {
        let ca = a - mu_src;
        let cb = b - mu_dst;
        cov += cb * ca.transpose();
        scatter += ca * ca.transpose();
        var_src += ca.norm_squared();
    }
    cov *= inv_n;
    var_src *= inv_n;

    let extents = scatter.symmetric_eigen().eigenvalues;
    let mut sorted = [extents[0], extents[1], extents[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    if !(sorted[0] > 0.0) || sorted[1] <= RANK_EPS * sorted[0] {
        return Err(Error::DegenerateCorrespondence);
    }

    let svd = cov.svd(true, true);
    let u = svd.u.ok_or(Error::DegenerateCorrespondence)?;
    let v_t = svd.v_t.ok_or(Error::DegenerateCorrespondence)?;
    let d = svd.singular_values;
    let mut signs = Vec3::repeat(1.0);
    if u.determinant() * v_t.determinant() < 0.0 {
        let smallest = (0..3).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap_or(2);
        signs[smallest] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&signs) * v_t;
    let scale = d.component_mul(&signs).sum() / var_src;
    let rotation = Rotation3::from_matrix_unchecked(rotation);
    let translation = mu_dst - scale * (rotation * mu_src);
    Ok(Similarity {
        rotation,
        translation,
        scale,
    })
}

/// Root-mean-square of `‖dst − T(src)‖` over the pairs.
pub fn residual_rms(sim: &Similarity, src: &[Vec3], dst: &[Vec3]) -> f64 {
    if src.is_empty() {
        return 0.0;
    }
    let sse: f64 = src
        .iter()
        .zip(dst)
        .map(|(a, b)| (sim.apply(a) - b).norm_squared())
        .sum();
    (sse / src.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geodesic_angle, is_rotation, rotation_about};
    use nalgebra::{Matrix4, Quaternion, UnitQuaternion};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn tetra() -> Vec<Vec3> {
        vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]
    }

    /// Independent route: Horn's quaternion method for the rotation, then
    /// the normal equations of `s` and `t` given the rotation.
    fn horn_oracle(src: &[Vec3], dst: &[Vec3]) -> Similarity {
        let n = src.len() as f64;
        let ms = src.iter().sum::<Vec3>() / n;
        let md = dst.iter().sum::<Vec3>() / n;
        let mut s = Matrix3::zeros();
        for (a, b) in src.iter().zip(dst) {
            s += (a - ms) * (b - md).transpose();
        }
        let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
        let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
        let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
        let nmat = Matrix4::new(
            sxx + syy + szz,
            syz - szy,
            szx - sxz,
            sxy - syx,
            syz - szy,
            sxx - syy - szz,
            sxy + syx,
            szx + sxz,
            szx - sxz,
            sxy + syx,
            -sxx + syy - szz,
            syz + szy,
            sxy - syx,
            szx + sxz,
            syz + szy,
            -sxx - syy + szz,
        );
        let eig = nmat.symmetric_eigen();
        let i = (0..4)
            .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .unwrap();
        let q = eig.eigenvectors.column(i);
        let rot = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3])).to_rotation_matrix();
        // normal equations for the scale given R
        let num: f64 = src.iter().zip(dst).map(|(a, b)| (b - md).dot(&(rot * (a - ms)))).sum();
        let den: f64 = src.iter().map(|a| (a - ms).norm_squared()).sum();
        let scale = num / den;
        Similarity::new(rot, md - scale * (rot * ms), scale)
    }

    #[test]
    fn identity_correspondence() {
        let p = tetra();
        let s = umeyama(&p, &p).unwrap();
        assert!(geodesic_angle(s.rotation.matrix(), &Matrix3::identity()) < 1e-12);
        assert!(s.translation.norm() < 1e-12);
        assert!((s.scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constructed_transform() {
        let rz = rotation_about(&Vec3::z(), std::f64::consts::FRAC_PI_2);
        let truth = Similarity::new(rz, Vec3::new(1.0, 2.0, 3.0), 2.0);
        let src = tetra();
        let dst: Vec<Vec3> = src.iter().map(|p| truth.apply(p)).collect();
        let s = umeyama(&src, &dst).unwrap();
        assert!((s.scale - 2.0).abs() < 1e-9);
        assert!((s.translation - Vec3::new(1.0, 2.0, 3.0)).norm() < 1e-9);
        assert!((s.rotation.matrix() - rz.matrix()).amax() < 1e-9);
    }

    #[test]
    fn reflection_is_not_returned() {
        // mirror image target: best proper rotation still has det +1
        let src = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z(), Vec3::new(1.0, 1.0, 0.3)];
        let dst: Vec<Vec3> = src.iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        let s = umeyama(&src, &dst).unwrap();
        assert!(is_rotation(s.rotation.matrix(), 1e-9));
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<Vec3> = (0..5).map(|i| Vec3::x() * i as f64).collect();
        assert!(matches!(umeyama(&line, &line), Err(Error::DegenerateCorrespondence)));
        let two = vec![Vec3::zeros(), Vec3::x()];
        assert!(matches!(umeyama(&two, &two), Err(Error::InsufficientPoints { .. })));
        // coplanar source is fine
        let plane = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0)];
        assert!(umeyama(&plane, &plane).is_ok());
    }

    #[test]
    fn noisy_fit_matches_horn_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let truth = Similarity::new(
            rotation_about(&Vec3::new(0.2, -1.0, 0.4), 0.9),
            Vec3::new(0.1, -0.3, 0.8),
            1.3,
        );
        let noise = Normal::new(0.0, 1e-3).unwrap();
        let src: Vec<Vec3> = (0..200)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-0.1..0.1),
                    rng.random_range(-0.1..0.1),
                    rng.random_range(-0.1..0.1),
                )
            })
            .collect();
        let dst: Vec<Vec3> = src
            .iter()
            .map(|p| truth.apply(p) + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)))
            .collect();
        let fit = umeyama(&src, &dst).unwrap();
        let oracle = horn_oracle(&src, &dst);
        let (a, b) = (residual_rms(&fit, &src, &dst), residual_rms(&oracle, &src, &dst));
        assert!((a - b).abs() < 1e-9, "rms {a} vs oracle {b}");
        assert!(geodesic_angle(fit.rotation.matrix(), oracle.rotation.matrix()) < 1e-8);
    }

    fn arb_similarity() -> impl Strategy<Value = Similarity> {
        (
            (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
            0.0f64..3.1,
            (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
            0.1f64..5.0,
        )
            .prop_filter("axis", |(a, _, _, _)| Vec3::new(a.0, a.1, a.2).norm() > 0.1)
            .prop_map(|(a, ang, t, s)| {
                Similarity::new(
                    rotation_about(&Vec3::new(a.0, a.1, a.2), ang),
                    Vec3::new(t.0, t.1, t.2),
                    s,
                )
            })
    }

    fn cloud(seed: u64, n: usize) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                )
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn no_random_perturbation_does_better(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let src = cloud(seed, 30);
            let dst = cloud(seed + 1, 30);
            let fit = umeyama(&src, &dst).unwrap();
            let sse = |s: &Similarity| src.iter().zip(&dst).map(|(a, b)| (s.apply(a) - b).norm_squared()).sum::<f64>();
            let best = sse(&fit);
            for _ in 0..10_000 / 64 {
                let w = Vec3::new(rng.random_range(-1e-2..1e-2), rng.random_range(-1e-2..1e-2), rng.random_range(-1e-2..1e-2));
                let cand = Similarity::new(
                    Rotation3::new(w) * fit.rotation,
                    fit.translation + Vec3::new(rng.random_range(-1e-2..1e-2), rng.random_range(-1e-2..1e-2), rng.random_range(-1e-2..1e-2)),
                    fit.scale * (1.0 + rng.random_range(-1e-2..1e-2)),
                );
                prop_assert!(sse(&cand) >= best - 1e-12);
            }
        }

        #[test]
        fn rigid_equivariance(sim in arb_similarity(), g in arb_similarity(), seed in 0u64..1000) {
            let src = cloud(seed, 12);
            let dst: Vec<Vec3> = src.iter().map(|p| sim.apply(p)).collect();
            let g = Similarity { scale: 1.0, ..g };
            let moved: Vec<Vec3> = dst.iter().map(|p| g.apply(p)).collect();
            let a = umeyama(&src, &dst).unwrap();
            let b = umeyama(&src, &moved).unwrap();
            prop_assert!(((g.rotation * a.rotation).matrix() - b.rotation.matrix()).amax() < 1e-9);
            prop_assert!((g.rotation * a.translation + g.translation - b.translation).norm() < 1e-9);
            prop_assert!((a.scale - b.scale).abs() < 1e-9);
            prop_assert!(is_rotation(b.rotation.matrix(), 1e-9));
        }
    }
}
