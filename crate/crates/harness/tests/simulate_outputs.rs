use std::fs;
use std::path::Path;

use sle4rho_core::boundary::MeasurePair;
use sle4rho_harness::config::ExperimentConfig;
use sle4rho_harness::simulate::{run_simulate, Outputs};

fn rows(p: &Path) -> usize {
    fs::read_to_string(p).unwrap().lines().count() - 1
}

fn config(dir: &Path, pair: &MeasurePair) -> ExperimentConfig {
    let mut c = ExperimentConfig::new("test", pair);
    c.paths = 10;
    c.horizon = 0.2;
    c.seed = 5;
    c.out = dir.to_path_buf();
    c
}

#[test]
fn empty_pair_writes_three_matching_files_per_path() {
    let dir = tempfile::tempdir().unwrap();
    let files = run_simulate(&config(dir.path(), &MeasurePair::empty()), Outputs::ALL).unwrap();
    assert_eq!(files.len(), 30);
    for i in 0..10 {
        let d = rows(&dir.path().join(format!("driving_{i:04}.csv")));
        let c = rows(&dir.path().join(format!("curve_{i:04}.csv")));
        let o = rows(&dir.path().join(format!("observable_{i:04}.csv")));
        assert_eq!(d, 201);
        assert_eq!((c, o), (d, d));
    }
    let head = fs::read_to_string(dir.path().join("driving_0000.csv")).unwrap();
    assert!(head.starts_with("k,t,w,b,zero_minus,zero_plus\n"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let pair = MeasurePair::atomic(&[(-1.0, -0.5)], &[(0.0, -0.5), (2.0, 0.25)]).unwrap();
    let fa = run_simulate(&config(a.path(), &pair), Outputs::ALL).unwrap();
    let fb = run_simulate(&config(b.path(), &pair), Outputs::ALL).unwrap();
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{x:?}");
    }
}

#[test]
fn threshold_paths_are_truncated_with_an_event_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let pair = MeasurePair::atomic(&[], &[(1.0, -2.5)]).unwrap();
    let mut c = config(dir.path(), &pair);
    c.paths = 40;
    c.horizon = 2.0;
    c.z = [-3.0, 3.0];
    let files = run_simulate(&c, Outputs::ALL).unwrap();
    let events: Vec<_> = files
        .iter()
        .filter(|p| p.to_string_lossy().contains("events_"))
        .collect();
    assert!(!events.is_empty());
    for e in events {
        let name = e
            .file_name()
            .unwrap()
            .to_string_lossy()
            .replace("events_", "driving_");
        let d = rows(&dir.path().join(name.replace(".json", ".csv")));
        assert!(d < 2001, "stopped path has {d} rows");
        assert!(fs::read_to_string(e).unwrap().contains("\"mass\""));
    }
}

#[test]
fn config_files_resolve_boundary_files_and_hash_stably() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("b.json"),
        r#"{"atomsR": [[0.0, -0.5]], "atomsL": [[-1.0, 0.25]]}"#,
    )
    .unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"scenario": "s", "boundaryFile": "b.json", "paths": 3}"#,
    )
    .unwrap();
    let a = ExperimentConfig::load(&cfg).unwrap();
    let b = ExperimentConfig::load(&cfg).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.pair().unwrap().right().atoms()[0].mass, -0.5);
    fs::write(&cfg, r#"{"scenario": "s", "boundaryFile": "missing.json"}"#).unwrap();
    assert!(ExperimentConfig::load(&cfg).is_err());
}
