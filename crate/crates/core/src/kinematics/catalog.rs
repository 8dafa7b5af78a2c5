//! A small set of procedurally built models, one per category, used by the
//! examples, the shipped model files and the test suites.

use std::f64::consts::FRAC_PI_2;

use crate::geometry::Vec3;

use super::{ArticulatedModel, JointType, ModelBuilder};

/// Surface grid resolution per cuboid face.
const GRID: usize = 6;

fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Base and lid hinged along x at the back edge; the lid stands upright at
/// rest.
pub fn laptop() -> ArticulatedModel {
    ModelBuilder::new("laptop")
        .id("laptop_01")
        .cuboid("base", v(-0.15, -0.12, 0.0), v(0.15, 0.12, 0.02), GRID)
        .cuboid("lid", v(-0.15, 0.10, 0.02), v(0.15, 0.12, 0.23), GRID)
        .joint(JointType::Revolute, 1, 2, Vec3::x(), v(0.0, 0.11, 0.02), (-0.5, 1.2))
        .build()
        .expect("laptop model is valid")
}

/// Cabinet with one drawer sliding out along −y.
pub fn drawer() -> ArticulatedModel {
    ModelBuilder::new("drawer")
        .id("drawer_01")
        .cuboid("cabinet", v(-0.2, -0.2, 0.0), v(0.2, 0.2, 0.3), GRID)
        .cuboid("drawer", v(-0.17, -0.22, 0.08), v(0.17, 0.15, 0.22), GRID)
        .joint(JointType::Prismatic, 1, 2, -Vec3::y(), Vec3::zeros(), (0.0, 0.25))
        .build()
        .expect("drawer model is valid")
}

/// Two stacked blades pivoting about the vertical through their middle.
pub fn scissors() -> ArticulatedModel {
    ModelBuilder::new("scissors")
        .id("scissors_01")
        .cuboid("blade_a", v(-0.1, -0.012, 0.0), v(0.1, 0.012, 0.01), GRID)
        .cuboid("blade_b", v(-0.1, -0.012, 0.01), v(0.1, 0.012, 0.02), GRID)
        .joint(JointType::Revolute, 1, 2, Vec3::z(), v(0.0, 0.0, 0.01), (0.0, 0.8))
        .build()
        .expect("scissors model is valid")
}

/// Base, rigidly attached pole and a tilting arm: three parts, one fixed
/// joint.
pub fn lamp() -> ArticulatedModel {
    ModelBuilder::new("lamp")
        .id("lamp_01")
        .cuboid("base", v(-0.08, -0.08, 0.0), v(0.08, 0.08, 0.03), GRID)
        .cuboid("pole", v(-0.015, -0.015, 0.03), v(0.015, 0.015, 0.3), GRID)
        .cuboid("arm", v(-0.015, -0.015, 0.3), v(0.2, 0.015, 0.33), GRID)
        .joint(JointType::Fixed, 1, 2, Vec3::z(), Vec3::zeros(), (0.0, 0.0))
        .joint(
            JointType::Revolute,
            2,
            3,
            Vec3::y(),
            v(0.0, 0.0, 0.315),
            (-0.6, FRAC_PI_2 / 3.0),
        )
        .build()
        .expect("lamp model is valid")
}

pub fn standard_models() -> Vec<ArticulatedModel> {
    vec![laptop(), drawer(), scissors(), lamp()]
}
