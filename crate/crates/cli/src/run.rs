use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use artipose::formats::{read_observation, write_observation, write_predictions, EstimateDocument, SceneDocument};
use artipose::kinematics::{load_model, ArticulatedModel};
use artipose::metrics::{match_instances, part_records, sort_records, EvalReport, PartMatchRecord};
use artipose::oracle::perturb;
use artipose::scenegen::{
    fit_plane_ransac, place_instances, sample_observation, synthetic_background, BBox2d, CameraModel, Observation,
};
use artipose::seed::{derive_seed, derive_seed2, tag};
use artipose::solver::{solve_instance, KinematicEdge, SolverConfig};
use artipose::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::layout::Layout;

/// Record of a synthesized dataset. Its bytes depend only on the
/// configuration, so two runs with the same seed produce identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub scenes: usize,
    pub instances_per_scene: usize,
    pub points_per_instance: usize,
    pub models: Vec<String>,
    /// Relative path → SHA-256 of the file contents.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::data(path, format!("{e} (run synth first)")))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::data(path, e))
    }
}

/// Models of a run, sorted by file name.
pub struct ModelSet {
    pub models: Vec<ArticulatedModel>,
    by_id: HashMap<String, usize>,
}

impl ModelSet {
    /// Loads every `*.json` model document in `dir`.
    pub fn load(dir: &Path) -> CliResult<Self> {
        let entries =
            fs::read_dir(dir).map_err(|e| CliError::Config(format!("model directory {}: {e}", dir.display())))?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(CliError::Config(format!("no *.json models in {}", dir.display())));
        }
        let mut models = Vec::with_capacity(files.len());
        for f in &files {
            let bytes = fs::read(f).map_err(|e| CliError::Config(format!("{}: {e}", f.display())))?;
            models.push(load_model(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", f.display())))?);
        }
        Self::new(models)
    }

    pub fn new(models: Vec<ArticulatedModel>) -> CliResult<Self> {
        let mut by_id = HashMap::new();
        for (i, m) in models.iter().enumerate() {
            if by_id.insert(m.id().to_string(), i).is_some() {
                return Err(CliError::Config(format!("duplicate model id {}", m.id())));
            }
        }
        Ok(Self { models, by_id })
    }

    pub fn get(&self, id: &str) -> CliResult<&ArticulatedModel> {
        self.by_id
            .get(id)
            .map(|&i| &self.models[i])
            .ok_or_else(|| CliError::Data(format!("scene references unknown model {id}")))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::data(path, e))
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::data(path, e))
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn scenegen_error(scene: usize, e: Error) -> CliError {
    match e {
        Error::InvalidConfig(m) => CliError::Config(m),
        e => CliError::Placement(format!("scene {scene}: {e}")),
    }
}

struct GeneratedScene {
    document: SceneDocument,
    observations: Vec<Observation>,
}

fn generate_scene(cfg: &RunConfig, models: &ModelSet, camera: &CameraModel, s: usize) -> CliResult<GeneratedScene> {
    let sc = &cfg.scene;
    let root = cfg.seed;
    let idx = s as u64;
    let background = synthetic_background(
        sc.table_height,
        sc.table_half_size,
        sc.table_points,
        sc.clutter_points,
        derive_seed(root, tag::BACKGROUND, idx),
    );
    let plane = fit_plane_ransac(
        &background,
        sc.plane_iterations,
        sc.plane_tolerance,
        &camera.center_world(),
        derive_seed(root, tag::PLANE, idx),
    )
    .map_err(|e| scenegen_error(s, e))?;
    let instances = place_instances(
        &models.models,
        &plane,
        camera,
        &sc.placement(),
        derive_seed(root, tag::PLACEMENT, idx),
    )
    .map_err(|e| scenegen_error(s, e))?;
    let observations = instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let model = models.get(&inst.model_id)?;
            sample_observation(
                inst,
                model,
                camera,
                sc.points,
                derive_seed2(root, tag::OBSERVATION, idx, i as u64),
            )
            .map_err(|e| scenegen_error(s, e))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(GeneratedScene {
        document: SceneDocument::new(s, root, camera, &plane, &instances),
        observations,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthSummary {
    pub scenes: usize,
    pub instances: usize,
}

/// Generates all scenes with their observations and writes the manifest.
pub fn synth(cfg: &RunConfig, models: &ModelSet) -> CliResult<SynthSummary> {
    let layout = Layout::new(&cfg.output_dir);
    for d in layout.subdirs() {
        fs::create_dir_all(&d).map_err(|e| CliError::data(&d, e))?;
    }
    let camera = cfg.scene.camera.build()?;
    let generated: Vec<CliResult<GeneratedScene>> = with_threads(cfg.threads, || {
        (0..cfg.scene.scenes)
            .into_par_iter()
            .map(|s| generate_scene(cfg, models, &camera, s))
            .collect()
    })?;

    let mut files = BTreeMap::new();
    let mut emit = |rel: String, bytes: Vec<u8>| -> CliResult<()> {
        write_file(&layout.path(&rel), &bytes)?;
        files.insert(rel, sha256_hex(&bytes));
        Ok(())
    };
    let mut instances = 0;
    for (s, scene) in generated.into_iter().enumerate() {
        let scene = scene?;
        for (i, obs) in scene.observations.iter().enumerate() {
            let mut buf = Vec::new();
            write_observation(obs, &mut buf).map_err(|e| CliError::Data(format!("observation {s}/{i}: {e}")))?;
            emit(Layout::observation_rel(s, i), buf)?;
            instances += 1;
        }
        emit(Layout::scene_rel(s), scene.document.to_json().into_bytes())?;
    }
    let manifest = Manifest {
        seed: cfg.seed,
        scenes: cfg.scene.scenes,
        instances_per_scene: cfg.scene.instances,
        points_per_instance: cfg.scene.points,
        models: models.models.iter().map(|m| m.id().to_string()).collect(),
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&layout.manifest(), text.as_bytes())?;
    Ok(SynthSummary {
        scenes: cfg.scene.scenes,
        instances,
    })
}

fn load_scene(layout: &Layout, s: usize) -> CliResult<SceneDocument> {
    let path = layout.path(&Layout::scene_rel(s));
    SceneDocument::from_json(&read_file(&path)?).map_err(|e| CliError::data(&path, e))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveSummary {
    pub solved: usize,
    /// Instances for which no part could be recovered; their estimate
    /// files carry a `failed:` flag and no parts.
    pub failed: Vec<String>,
}

fn solve_one(
    cfg: &RunConfig,
    layout: &Layout,
    model: &ArticulatedModel,
    camera: &CameraModel,
    s: usize,
    i: usize,
) -> CliResult<Option<String>> {
    let obs_path = layout.path(&Layout::observation_rel(s, i));
    let obs = read_observation(read_file(&obs_path)?.as_slice()).map_err(|e| CliError::data(&obs_path, e))?;
    if obs.num_parts != model.num_parts() {
        return Err(CliError::data(
            &obs_path,
            format!(
                "{} parts, model {} has {}",
                obs.num_parts,
                model.id(),
                model.num_parts()
            ),
        ));
    }
    let (si, ii) = (s as u64, i as u64);
    let pred = perturb(&obs, &cfg.noise, derive_seed2(cfg.seed, tag::NOISE, si, ii))
        .map_err(|e| CliError::data(&obs_path, e))?;
    let mut solver: SolverConfig = cfg.solver.clone();
    solver.ransac.rng_seed = derive_seed2(cfg.seed, tag::RANSAC, si, ii);

    let bbox = BBox2d::of_points(
        camera,
        obs.points_cam
            .iter()
            .zip(&pred.seg)
            .filter(|(_, &l)| l != 0)
            .map(|(p, _)| p),
    );
    let mut buf = Vec::new();
    write_predictions(&pred, &mut buf).map_err(|e| CliError::data(&obs_path, e))?;
    write_file(&layout.path(&Layout::prediction_rel(s, i)), &buf)?;

    let edges = KinematicEdge::from_model(model);
    let (doc, failure) = match solve_instance(&pred, &obs.points_cam, model.nocs_frames(), &edges, &solver) {
        Ok(est) => (EstimateDocument::from_estimate(&est, bbox.as_ref()), None),
        Err(e) => {
            let doc = EstimateDocument {
                num_parts: model.num_parts(),
                bbox2d: None,
                parts: Vec::new(),
                joints: Vec::new(),
                flags: vec![format!("failed:{e}")],
            };
            (doc, Some(format!("{}: {e}", Layout::observation_rel(s, i))))
        }
    };
    write_file(&layout.path(&Layout::estimate_rel(s, i)), doc.to_json().as_bytes())?;
    Ok(failure)
}

/// Perturbs every observation with the oracle, solves it and writes the
/// predictions and estimates. Per-instance solver failures are recorded,
/// not fatal; unreadable inputs are.
pub fn solve(cfg: &RunConfig, models: &ModelSet) -> CliResult<SolveSummary> {
    let layout = Layout::new(&cfg.output_dir);
    let manifest = Manifest::load(&layout.manifest())?;
    for d in layout.subdirs() {
        fs::create_dir_all(&d).map_err(|e| CliError::data(&d, e))?;
    }
    let mut tasks = Vec::new();
    let mut cameras = Vec::with_capacity(manifest.scenes);
    for s in 0..manifest.scenes {
        let doc = load_scene(&layout, s)?;
        let path = layout.path(&Layout::scene_rel(s));
        cameras.push(doc.camera().map_err(|e| CliError::data(&path, e))?);
        for (i, inst) in doc.instances.iter().enumerate() {
            tasks.push((s, i, models.get(&inst.model_id)?));
        }
    }
    let outcomes: Vec<CliResult<Option<String>>> = with_threads(cfg.threads, || {
        tasks
            .par_iter()
            .map(|&(s, i, model)| solve_one(cfg, &layout, model, &cameras[s], s, i))
            .collect()
    })?;
    let mut summary = SolveSummary {
        solved: 0,
        failed: Vec::new(),
    };
    for o in outcomes {
        match o? {
            None => summary.solved += 1,
            Some(f) => summary.failed.push(f),
        }
    }
    Ok(summary)
}

fn scene_records(cfg: &RunConfig, layout: &Layout, models: &ModelSet, s: usize) -> CliResult<Vec<PartMatchRecord>> {
    let scene_path = layout.path(&Layout::scene_rel(s));
    let doc = load_scene(layout, s)?;
    let gt = doc.scene_instances().map_err(|e| CliError::data(&scene_path, e))?;
    let mut estimates = Vec::with_capacity(gt.len());
    for i in 0..gt.len() {
        let path = layout.path(&Layout::estimate_rel(s, i));
        let est = EstimateDocument::from_json(&read_file(&path)?).map_err(|e| CliError::data(&path, e))?;
        let poses = est.part_poses().map_err(|e| CliError::data(&path, e))?;
        estimates.push((est.bbox(), poses));
    }

    // association runs per category so a pose is never scored against a
    // model it was not solved for
    let mut records = Vec::new();
    let mut categories: Vec<&str> = gt.iter().map(|g| g.category.as_str()).collect();
    categories.sort_unstable();
    categories.dedup();
    for cat in categories {
        let gt_idx: Vec<usize> = (0..gt.len()).filter(|&j| gt[j].category == cat).collect();
        let pred_idx: Vec<usize> = gt_idx.iter().copied().filter(|&i| estimates[i].0.is_some()).collect();
        let pred_boxes: Vec<BBox2d> = pred_idx.iter().map(|&i| estimates[i].0.unwrap()).collect();
        let gt_boxes: Vec<BBox2d> = gt_idx.iter().map(|&j| gt[j].bbox2d).collect();
        let assoc = match_instances(&pred_boxes, &gt_boxes, cfg.metrics.match_iou);
        for (gj, &j) in gt_idx.iter().enumerate() {
            let model = models.get(&gt[j].model_id)?;
            let est = assoc.prediction_for(gj).map(|p| estimates[pred_idx[p]].1.as_slice());
            records.extend(part_records(s, j, model, &gt[j], est).map_err(|e| CliError::data(&scene_path, e))?);
        }
    }
    Ok(records)
}

/// Matches estimates to ground truth, scores every part and writes the
/// per-part records and the report.
pub fn eval(cfg: &RunConfig, models: &ModelSet) -> CliResult<EvalReport> {
    let layout = Layout::new(&cfg.output_dir);
    let manifest = Manifest::load(&layout.manifest())?;
    let per_scene: Vec<CliResult<Vec<PartMatchRecord>>> = with_threads(cfg.threads, || {
        (0..manifest.scenes)
            .into_par_iter()
            .map(|s| scene_records(cfg, &layout, models, s))
            .collect()
    })?;
    let mut records = Vec::new();
    for r in per_scene {
        records.extend(r?);
    }
    sort_records(&mut records);

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &records {
        w.serialize(r).map_err(|e| CliError::data(&layout.records(), e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::data(&layout.records(), e))?;
    write_file(&layout.records(), &bytes)?;

    let report = EvalReport::from_records(&records, &cfg.metrics.grids())
        .map_err(|e| CliError::Data(format!("evaluation: {e}")))?;
    write_file(&layout.report_csv(), report.to_csv().as_bytes())?;
    write_file(&layout.report_json(), report.to_json().as_bytes())?;
    Ok(report)
}

/// Everything a pipeline run did.
#[derive(Debug)]
pub struct PipelineSummary {
    /// `None` when an existing dataset was reused.
    pub synth: Option<SynthSummary>,
    pub solve: SolveSummary,
    pub report: EvalReport,
}

/// Synthesizes (unless a manifest already exists), solves and evaluates.
pub fn pipeline(cfg: &RunConfig, models: &ModelSet) -> CliResult<PipelineSummary> {
    let layout = Layout::new(&cfg.output_dir);
    let synth = if layout.manifest().exists() {
        None
    } else {
        Some(synth(cfg, models)?)
    };
    let solve = solve(cfg, models)?;
    let report = eval(cfg, models)?;
    Ok(PipelineSummary { synth, solve, report })
}
