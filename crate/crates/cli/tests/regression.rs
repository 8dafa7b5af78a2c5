//! Fixed-seed baseline of the acceptance configuration, frozen at the first
//! green run. Any report cell drifting by more than half an AP point fails.

use std::path::Path;

use artipose_cli::{pipeline, ModelSet, RunConfig};

const TOLERANCE: f64 = 0.5;

// category, parts, then the twelve report columns
const FROZEN: [(&str, usize, [f64; 12]); 5] = [
    ("drawer", 10, [100.0; 12]),
    ("lamp", 54, [100.0; 12]),
    ("laptop", 28, [100.0; 12]),
    (
        "scissors",
        46,
        [
            99.13, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0,
        ],
    ),
    (
        "mean",
        138,
        [
            99.78, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0,
        ],
    ),
];

#[test]
fn acceptance_config_matches_frozen_report() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let text = std::fs::read_to_string(root.join("configs/acceptance.toml")).unwrap();
    let mut cfg = RunConfig::from_toml(&text).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    cfg.model_dir = root.join("models");
    cfg.output_dir = tmp.path().to_path_buf();
    let models = ModelSet::load(&cfg.model_dir).unwrap();
    let run = pipeline(&cfg, &models).unwrap();
    assert!(run.solve.failed.is_empty());

    let rows: Vec<_> = run.report.all_rows().collect();
    assert_eq!(rows.len(), FROZEN.len());
    for (row, (category, parts, values)) in rows.iter().zip(FROZEN) {
        assert_eq!((row.category.as_str(), row.parts), (category, parts));
        for ((got, want), col) in row.values().iter().zip(values).zip(artipose::metrics::REPORT_COLUMNS) {
            assert!(
                (got - want).abs() <= TOLERANCE,
                "{category} {col}: {got:.2} vs frozen {want:.2}"
            );
        }
    }
}
