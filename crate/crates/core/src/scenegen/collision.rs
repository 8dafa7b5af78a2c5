use crate::error::Result;
use crate::geometry::{OrientedBox, Vec3};

/// Boxes separated by at most this gap still count as touching.
pub const TOUCH_TOLERANCE: f64 = 1e-9;

/// Separating-axis test over the 15 candidate axes (3 + 3 face normals and
/// 9 edge cross products). Interiors must overlap by more than
/// [`TOUCH_TOLERANCE`]; touching faces do not intersect.
pub fn obb_intersects(a: &OrientedBox, b: &OrientedBox) -> Result<bool> {
    a.validate()?;
    b.validate()?;
    let axes_a = [a.axis(0), a.axis(1), a.axis(2)];
    let axes_b = [b.axis(0), b.axis(1), b.axis(2)];
    let delta = b.center - a.center;

    let separated_along = |l: Vec3| -> bool {
        let radius = |axes: &[Vec3; 3], half: &Vec3| (0..3).map(|i| half[i] * axes[i].dot(&l).abs()).sum::<f64>();
        let gap = delta.dot(&l).abs() - radius(&axes_a, &a.half_extents) - radius(&axes_b, &b.half_extents);
        gap > -TOUCH_TOLERANCE
    };

    let faces = axes_a.iter().chain(axes_b.iter()).copied();
    let edges = axes_a
        .iter()
        .flat_map(|ea| axes_b.iter().map(move |eb| ea.cross(eb)))
        .filter(|c| c.norm() > 1e-9)
        .map(|c| c.normalize());
    Ok(!faces.chain(edges).any(separated_along))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_about;
    use nalgebra::Rotation3;

    fn unit_cube(center: Vec3, rot: Rotation3<f64>) -> OrientedBox {
        OrientedBox::new(center, rot, Vec3::repeat(0.5)).unwrap()
    }

    #[test]
    fn identical_cubes_intersect() {
        let a = unit_cube(Vec3::zeros(), Rotation3::identity());
        assert!(obb_intersects(&a, &a).unwrap());
    }

    #[test]
    fn distant_cubes_do_not() {
        let a = unit_cube(Vec3::zeros(), Rotation3::identity());
        let b = unit_cube(Vec3::new(2.0, 0.0, 0.0), Rotation3::identity());
        assert!(!obb_intersects(&a, &b).unwrap());
    }

    #[test]
    fn touching_faces_do_not_intersect() {
        let a = unit_cube(Vec3::zeros(), Rotation3::identity());
        let b = unit_cube(Vec3::new(1.0, 0.3, 0.0), Rotation3::identity());
        assert!(!obb_intersects(&a, &b).unwrap());
        let c = unit_cube(Vec3::new(1.0 - 1e-6, 0.3, 0.0), Rotation3::identity());
        assert!(obb_intersects(&a, &c).unwrap());
    }

    #[test]
    fn edge_axis_separation() {
        // two cubes rotated so that only an edge-edge axis separates them
        let a = unit_cube(Vec3::zeros(), rotation_about(&Vec3::z(), std::f64::consts::FRAC_PI_4));
        let b = unit_cube(
            Vec3::new(1.2, 1.2, 0.0),
            rotation_about(&Vec3::x(), std::f64::consts::FRAC_PI_4),
        );
        let hit = obb_intersects(&a, &b).unwrap();
        assert_eq!(hit, obb_intersects(&b, &a).unwrap());
    }

    #[test]
    fn rejects_flat_box() {
        let a = unit_cube(Vec3::zeros(), Rotation3::identity());
        let flat = OrientedBox {
            center: Vec3::zeros(),
            rotation: Rotation3::identity(),
            half_extents: Vec3::new(0.5, 0.0, 0.5),
        };
        assert!(obb_intersects(&a, &flat).is_err());
    }
}
