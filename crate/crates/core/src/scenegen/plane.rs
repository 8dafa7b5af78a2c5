use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Plane `{x : normal·x = offset}` with a unit normal facing the viewpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneModel {
    pub normal: Vec3,
    pub offset: f64,
    pub inlier_count: usize,
}

impl PlaneModel {
    /// Signed height of `p` above the plane along the normal.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Point of the plane closest to the origin.
    pub fn anchor(&self) -> Vec3 {
        self.normal * self.offset
    }

    /// Orthonormal in-plane axes `(e1, e2)` with `e1 × e2 = normal`.
    pub fn basis(&self) -> (Vec3, Vec3) {
        let n = self.normal;
        let seed = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let e1 = (seed - n * seed.dot(&n)).normalize();
        let e2 = n.cross(&e1);
        (e1, e2)
    }

    /// World point at in-plane coordinates `(u, v)`.
    pub fn point_at(&self, u: f64, v: f64) -> Vec3 {
        let (e1, e2) = self.basis();
        self.anchor() + e1 * u + e2 * v
    }
}

/// Smallest singular-value ratio under which a point triple counts as
/// collinear.
const COLLINEAR_EPS: f64 = 1e-12;

/// RANSAC plane fit: three-point hypotheses scored by inlier count, the best
/// refit by least squares over its inliers. The normal is oriented so the
/// `viewpoint` lies on its positive side.
pub fn fit_plane_ransac(
    points: &[Vec3],
    iterations: usize,
    inlier_tol: f64,
    viewpoint: &Vec3,
    rng_seed: u64,
) -> Result<PlaneModel> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if iterations == 0 || !(inlier_tol > 0.0) {
        return Err(Error::InvalidConfig(
            "iterations ≥ 1 and inlier_tol > 0 required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut best: Option<(usize, Vec3, f64)> = None;
    for _ in 0..iterations {
        let idx = sample(&mut rng, points.len(), 3);
        let (a, b, c) = (points[idx.index(0)], points[idx.index(1)], points[idx.index(2)]);
        let cross = (b - a).cross(&(c - a));
        let scale = (b - a).norm() * (c - a).norm();
        if cross.norm() <= COLLINEAR_EPS * scale.max(f64::MIN_POSITIVE) {
            continue;
        }
        let n = cross.normalize();
        let d = n.dot(&a);
        let count = points.iter().filter(|p| (n.dot(p) - d).abs() <= inlier_tol).count();
        if best.is_none_or(|(c, _, _)| count > c) {
            best = Some((count, n, d));
        }
    }
    let (_, n, d) = best.ok_or(Error::Collinear)?;
    let inliers: Vec<Vec3> = points
        .iter()
        .filter(|p| (n.dot(p) - d).abs() <= inlier_tol)
        .copied()
        .collect();
    let (mut normal, mut offset) = least_squares_plane(&inliers).unwrap_or((n, d));
    if normal.dot(&(viewpoint - normal * offset)) < 0.0 {
        normal = -normal;
        offset = -offset;
    }
    let inlier_count = points
        .iter()
        .filter(|p| (normal.dot(p) - offset).abs() <= inlier_tol)
        .count();
    Ok(PlaneModel {
        normal,
        offset,
        inlier_count,
    })
}

/// Total least-squares plane through a point set: normal is the
/// eigenvector of the scatter matrix with the smallest eigenvalue.
fn least_squares_plane(points: &[Vec3]) -> Option<(Vec3, f64)> {
    if points.len() < 3 {
        return None;
    }
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let scatter = points
        .iter()
        .map(|p| (p - centroid) * (p - centroid).transpose())
        .sum::<nalgebra::Matrix3<f64>>();
    let eig = scatter.symmetric_eigen();
    let (i, _) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    let normal = eig.eigenvectors.column(i).into_owned().normalize();
    Some((normal, normal.dot(&centroid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn grid_on_plane(z: f64) -> Vec<Vec3> {
        (0..10)
            .flat_map(|i| (0..10).map(move |j| Vec3::new(i as f64 * 0.1 - 0.45, j as f64 * 0.1 - 0.45, z)))
            .collect()
    }

    #[test]
    fn exact_plane() {
        let pts = grid_on_plane(0.8);
        let plane = fit_plane_ransac(&pts, 50, 1e-3, &Vec3::new(0.0, 0.0, 2.0), 1).unwrap();
        assert!((plane.normal - Vec3::z()).norm() < 1e-9);
        assert!((plane.offset - 0.8).abs() < 1e-9);
        assert_eq!(plane.inlier_count, 100);
    }

    #[test]
    fn normal_faces_viewpoint() {
        let pts = grid_on_plane(0.8);
        let plane = fit_plane_ransac(&pts, 50, 1e-3, &Vec3::zeros(), 1).unwrap();
        assert!((plane.normal + Vec3::z()).norm() < 1e-9);
        assert!((plane.offset + 0.8).abs() < 1e-9);
    }

    #[test]
    fn outliers_rejected() {
        let mut pts = grid_on_plane(0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            pts.push(Vec3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                0.3 + rng.random::<f64>(),
            ));
        }
        let plane = fit_plane_ransac(&pts, 200, 0.005, &Vec3::new(0.0, 0.0, 2.0), 7).unwrap();
        let angle = plane.normal.dot(&Vec3::z()).clamp(-1.0, 1.0).acos().to_degrees();
        assert!(angle < 0.5, "angle {angle}");
        assert!(plane.inlier_count >= 95);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![Vec3::zeros(), Vec3::x()];
        assert!(matches!(
            fit_plane_ransac(&pts, 10, 0.01, &Vec3::z(), 0),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn collinear_points() {
        let pts: Vec<Vec3> = (0..10).map(|i| Vec3::x() * i as f64).collect();
        assert!(matches!(
            fit_plane_ransac(&pts, 10, 0.01, &Vec3::z(), 0),
            Err(Error::Collinear)
        ));
    }
}
