use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use artipose_cli::Manifest;

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        "model_dir = {:?}\noutput_dir = {:?}\nseed = 5\n{extra}",
        models_dir(),
        dir.join("out")
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn artipose(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artipose"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "[scene]\nscenes = 10\ninstances = 3\npoints = 256\n";

#[test]
fn synth_writes_every_scene_and_observation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = artipose(&cfg, &["synth"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let manifest = Manifest::load(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.scenes, 10);
    let obs = manifest.files.keys().filter(|k| k.starts_with("observations/")).count();
    let scenes = manifest.files.keys().filter(|k| k.starts_with("scenes/")).count();
    assert_eq!((obs, scenes), (30, 10));
    assert!(out.join("observations/0009_02.tbl").is_file());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let runs: Vec<_> = ["1", "4"]
        .iter()
        .map(|threads| {
            let tmp = tempfile::tempdir().unwrap();
            let cfg = write_config(
                tmp.path(),
                "[scene]\nscenes = 4\npoints = 256\n[noise]\nnocs_sigma = 0.02\noutlier_frac = 0.1\n",
            );
            let o = artipose(&cfg, &["--threads", threads, "pipeline"]);
            assert!(o.status.success(), "{}", stderr(&o));
            let read = |f: &str| std::fs::read(tmp.path().join("out").join(f)).unwrap();
            (
                read("manifest.json"),
                read("report.json"),
                read("records.csv"),
                o.stdout,
            )
        })
        .collect();
    assert!(runs[0] == runs[1]);
}

#[test]
fn missing_model_dir_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("run.toml");
    std::fs::write(&path, "model_dir = \"/nowhere/models\"\noutput_dir = \"o\"\nseed = 1\n").unwrap();
    let o = artipose(&path, &["synth"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nowhere/models"));
}

#[test]
fn missing_or_invalid_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = artipose(&tmp.path().join("absent.toml"), &["synth"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(tmp.path(), "[noise]\noutlier_frac = 1.5\n");
    assert_eq!(artipose(&cfg, &["synth"]).status.code(), Some(2));
}

#[test]
fn impossible_placement_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let extra = "[scene]\nscenes = 1\ninstances = 20\nmax_rejections = 5\nregion = [[-0.05, -0.05], [0.05, -0.05], [0.05, 0.05], [-0.05, 0.05]]\n";
    let cfg = write_config(tmp.path(), extra);
    let o = artipose(&cfg, &["synth"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn corrupt_observation_exits_4_naming_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[scene]\nscenes = 2\npoints = 128\n");
    assert!(artipose(&cfg, &["synth"]).status.success());
    let victim = tmp.path().join("out/observations/0001_01.tbl");
    let text = std::fs::read_to_string(&victim).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[5] = "0.1,oops,0.3";
    std::fs::write(&victim, lines.join("\n")).unwrap();
    let o = artipose(&cfg, &["solve"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("0001_01.tbl"), "{}", stderr(&o));
}

#[test]
fn eval_before_synth_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let o = artipose(&cfg, &["eval"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("manifest.json"));
}

#[test]
fn zero_noise_scores_full_marks_as_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[scene]\nscenes = 3\npoints = 256\n");
    let o = artipose(&cfg, &["--format", "json", "pipeline"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let mean = &report["mean"];
    for col in artipose::metrics::REPORT_COLUMNS {
        assert_eq!(mean[col].as_f64(), Some(100.0), "{col}");
    }
}

#[test]
fn seed_flag_changes_the_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[scene]\nscenes = 2\npoints = 64\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(artipose(&cfg, &["--out", a.to_str().unwrap(), "synth"])
        .status
        .success());
    assert!(artipose(&cfg, &["--out", b.to_str().unwrap(), "--seed", "6", "synth"])
        .status
        .success());
    let ma = Manifest::load(&a.join("manifest.json")).unwrap();
    let mb = Manifest::load(&b.join("manifest.json")).unwrap();
    assert_eq!((ma.seed, mb.seed), (5, 6));
    assert_ne!(ma.files, mb.files);
}
