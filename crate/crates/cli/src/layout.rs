use std::path::PathBuf;

/// File locations inside an output directory. All paths in the manifest are
/// relative to the directory and use `/`.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn scene_rel(scene: usize) -> String {
        format!("scenes/{scene:04}.json")
    }

    pub fn observation_rel(scene: usize, instance: usize) -> String {
        format!("observations/{scene:04}_{instance:02}.tbl")
    }

    pub fn prediction_rel(scene: usize, instance: usize) -> String {
        format!("predictions/{scene:04}_{instance:02}.tbl")
    }

    pub fn estimate_rel(scene: usize, instance: usize) -> String {
        format!("estimates/{scene:04}_{instance:02}.json")
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn records(&self) -> PathBuf {
        self.root.join("records.csv")
    }

    pub fn report_csv(&self) -> PathBuf {
        self.root.join("report.csv")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn subdirs(&self) -> [PathBuf; 4] {
        ["scenes", "observations", "predictions", "estimates"].map(|d| self.root.join(d))
    }
}
