use crate::error::Result;
use crate::geometry::{OrientedBox, Vec3};

type Polygon = Vec<Vec3>;

/// Six faces of a box, corners indexed as in [`OrientedBox::corners`].
fn box_faces(b: &OrientedBox) -> Vec<Polygon> {
    let c = b.corners();
    const FACES: [[usize; 4]; 6] = [
        [0, 2, 6, 4],
        [1, 5, 7, 3],
        [0, 4, 5, 1],
        [2, 3, 7, 6],
        [0, 1, 3, 2],
        [4, 6, 7, 5],
    ];
    FACES.iter().map(|f| f.iter().map(|&i| c[i]).collect()).collect()
}

/// Keeps the part of `poly` with `n·p ≤ d` (Sutherland–Hodgman, one plane).
fn clip_polygon(poly: &[Vec3], n: &Vec3, d: f64, eps: f64) -> Polygon {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let da = n.dot(&a) - d;
        let db = n.dot(&b) - d;
        if da <= eps {
            out.push(a);
        }
        if (da < -eps && db > eps) || (da > eps && db < -eps) {
            let t = da / (da - db);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Orders coplanar points by angle around their centroid in the plane with
/// normal `n`, dropping near-duplicates.
fn order_cap(points: &[Vec3], n: &Vec3, eps: f64) -> Polygon {
    let mut uniq: Vec<Vec3> = Vec::new();
    for p in points {
        if !uniq.iter().any(|q| (q - p).norm() <= eps) {
            uniq.push(*p);
        }
    }
    if uniq.len() < 3 {
        return Vec::new();
    }
    let m = uniq.iter().sum::<Vec3>() / uniq.len() as f64;
    let far = uniq
        .iter()
        .max_by(|a, b| (*a - m).norm_squared().total_cmp(&(*b - m).norm_squared()))
        .copied()
        .unwrap_or(m);
    let e1 = (far - m).normalize();
    let e2 = n.cross(&e1);
    let mut keyed: Vec<(f64, Vec3)> = uniq
        .into_iter()
        .map(|p| {
            let r = p - m;
            (r.dot(&e2).atan2(r.dot(&e1)), p)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    keyed.into_iter().map(|(_, p)| p).collect()
}

/// Volume of the convex polytope bounded by `faces`, as pyramids from the
/// vertex mean.
fn polytope_volume(faces: &[Polygon]) -> f64 {
    let verts: Vec<&Vec3> = faces.iter().flatten().collect();
    if verts.is_empty() {
        return 0.0;
    }
    let c = verts.iter().copied().sum::<Vec3>() / verts.len() as f64;
    let mut vol = 0.0;
    for f in faces {
        for i in 1..f.len().saturating_sub(1) {
            let (a, b, d) = (f[0] - c, f[i] - c, f[i + 1] - c);
            vol += a.dot(&b.cross(&d)).abs() / 6.0;
        }
    }
    vol
}

/// Intersection volume of two oriented boxes: the faces of `b` are clipped
/// against the six half-spaces of `a`, each clip closing the polytope with a
/// cap polygon on the clipping plane.
pub fn intersection_volume(a: &OrientedBox, b: &OrientedBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let scale = a.half_extents.max().max(b.half_extents.max());
    let eps = 1e-12 * scale.max(1.0);
    let mut faces = box_faces(b);
    for axis in 0..3 {
        let u = a.axis(axis);
        let h = a.half_extents[axis];
        for n in [u, -u] {
            let d = n.dot(&a.center) + h;
            let mut next = Vec::with_capacity(faces.len() + 1);
            let mut on_plane = Vec::new();
            for f in &faces {
                // faces lying in the clipping plane are rebuilt by the cap
                if f.iter().all(|p| (n.dot(p) - d).abs() <= eps) {
                    continue;
                }
                let clipped = clip_polygon(f, &n, d, eps);
                on_plane.extend(clipped.iter().filter(|p| (n.dot(p) - d).abs() <= eps).copied());
                if clipped.len() >= 3 {
                    next.push(clipped);
                }
            }
            let cap = order_cap(&on_plane, &n, eps);
            if !cap.is_empty() {
                next.push(cap);
            }
            faces = next;
            if faces.is_empty() {
                return Ok(0.0);
            }
        }
    }
    Ok(polytope_volume(&faces))
}

/// Intersection over union of two oriented boxes, in `[0, 1]`.
pub fn iou3d(a: &OrientedBox, b: &OrientedBox) -> Result<f64> {
    let inter = intersection_volume(a, b)?;
    let union = a.volume() + b.volume() - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}
