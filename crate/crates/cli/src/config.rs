use std::path::{Path, PathBuf};

use artipose::geometry::Vec3;
use artipose::metrics::MetricGrids;
use artipose::oracle::NoiseConfig;
use artipose::scenegen::{CameraModel, PlacementConfig};
use artipose::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Top-level run configuration, read from TOML. Relative paths resolve
/// against the working directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model_dir: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; the rayon default when absent.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub scenes: usize,
    pub instances: usize,
    pub scale_range: [f64; 2],
    /// Placement polygon in tabletop plane coordinates.
    pub region: Vec<[f64; 2]>,
    pub max_rejections: usize,
    /// Points per observed instance.
    pub points: usize,
    pub table_height: f64,
    pub table_half_size: f64,
    pub table_points: usize,
    pub clutter_points: usize,
    pub plane_iterations: usize,
    /// Plane inlier distance, meters.
    pub plane_tolerance: f64,
    pub camera: CameraConfig,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            scenes: 10,
            instances: 3,
            scale_range: [0.6, 0.9],
            region: vec![[-0.4, -0.3], [0.4, -0.3], [0.4, 0.3], [-0.4, 0.3]],
            max_rejections: 2000,
            points: 1024,
            table_height: 0.75,
            table_half_size: 0.8,
            table_points: 4000,
            clutter_points: 1000,
            plane_iterations: 300,
            plane_tolerance: 0.005,
            camera: CameraConfig::default(),
        }
    }
}

impl SceneConfig {
    pub fn placement(&self) -> PlacementConfig {
        PlacementConfig {
            count: self.instances,
            scale_range: (self.scale_range[0], self.scale_range[1]),
            max_rejections: self.max_rejections,
            region: self.region.clone(),
        }
    }
}

/// Pinhole camera placed by eye and target in world coordinates (z up).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub eye: [f64; 3],
    pub target: [f64; 3],
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            fx: 600.0,
            fy: 600.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
            eye: [0.0, -0.6, 1.65],
            target: [0.0, 0.0, 0.75],
        }
    }
}

impl CameraConfig {
    pub fn build(&self) -> CliResult<CameraModel> {
        let eye = Vec3::from(self.eye);
        let target = Vec3::from(self.target);
        let view = target - eye;
        // look_at needs a view direction that is not vertical
        if view.norm() < 1e-9 || view.normalize().cross(&Vec3::z()).norm() < 1e-6 {
            return Err(CliError::Config(
                "camera eye and target must differ and not be vertically aligned".into(),
            ));
        }
        let pose = CameraModel::look_at(&eye, &target, &Vec3::z());
        CameraModel::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height, pose)
            .map_err(|e| CliError::Config(format!("camera: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub rot_deg: Vec<f64>,
    pub trans_m: Vec<f64>,
    pub iou: Vec<f64>,
    /// Minimum 2D box IoU for a prediction to claim a ground-truth instance.
    pub match_iou: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        let g = MetricGrids::default();
        Self {
            rot_deg: g.rot_deg,
            trans_m: g.trans_m,
            iou: g.iou,
            match_iou: 0.5,
        }
    }
}

impl MetricsConfig {
    pub fn grids(&self) -> MetricGrids {
        MetricGrids {
            rot_deg: self.rot_deg.clone(),
            trans_m: self.trans_m.clone(),
            iou: self.iou.clone(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Checks everything that can be checked before touching the output
    /// directory.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !self.model_dir.is_dir() {
            return Err(CliError::Config(format!(
                "model directory {} does not exist",
                self.model_dir.display()
            )));
        }
        let s = &self.scene;
        if s.scenes == 0 || s.instances == 0 || s.points == 0 {
            return bad("scene.scenes, scene.instances and scene.points must be ≥ 1");
        }
        if s.table_points < 3 || s.plane_iterations == 0 || !(s.plane_tolerance > 0.0) || !(s.table_half_size > 0.0) {
            return bad("scene table and plane settings must be positive (table_points ≥ 3)");
        }
        s.placement().validate().map_err(|e| CliError::Config(e.to_string()))?;
        s.camera.build()?;
        self.noise.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.solver.ransac.iterations == 0 || !(self.solver.ransac.inlier_tol_m > 0.0) {
            return bad("solver.ransac needs iterations ≥ 1 and inlier_tol_m > 0");
        }
        if let Some(r) = &self.solver.refine {
            if !(r.tol > 0.0 && r.mu >= 0.0) {
                return bad("solver.refine needs tol > 0 and mu ≥ 0");
            }
        }
        let m = &self.metrics;
        if m.rot_deg.is_empty() || m.trans_m.is_empty() || m.iou.is_empty() {
            return bad("metric threshold grids must be non-empty");
        }
        if !(m.match_iou > 0.0 && m.match_iou <= 1.0) {
            return bad("metrics.match_iou must lie in (0, 1]");
        }
        if self.threads == Some(0) {
            return bad("threads must be ≥ 1");
        }
        Ok(())
    }
}
