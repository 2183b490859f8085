use std::fs;
use std::path::Path;
use std::process::Command;

use histmoran::experiments::{emit_plotdata, run_experiment, ExperimentConfig, PlotSource, RunManifest, MANIFEST_NAME};

fn config(body: &str, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml(body).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn duality_sweep_gaps_are_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"
experiment = "duality-sweep"
times = [0.0, 0.5, 2.0]
replicates = 20
seed = 3
[model]
N = 2
B = 1.0
b0 = 0.3
S = 1.5
"#,
        dir.path(),
    );
    let manifest = run_experiment(&cfg).unwrap();
    assert_eq!(manifest.outputs[0].name, "duality.csv");
    let rows = read_rows(&dir.path().join("duality.csv"));
    assert_eq!(rows.len(), 60);
    for row in rows {
        let gap: f64 = row[7].parse().unwrap();
        assert!(gap <= 1e-9, "{row:?}");
    }
}

#[test]
fn neutral_survival_table_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"
experiment = "survival-table"
times = [0.0, 0.25, 1.0, 3.0]
[model]
N = 10
B = 2.0
b0 = 0.3
"#,
        dir.path(),
    );
    run_experiment(&cfg).unwrap();
    let (b, b0, b1) = (2.0f64, 0.3, 0.7);
    for row in read_rows(&dir.path().join("survival.csv")) {
        if row[2] != "0" {
            continue;
        }
        let t: f64 = row[0].parse().unwrap();
        let f: f64 = row[3].parse().unwrap();
        let e2 = (-2.0 * b * t).exp() - 1.0;
        let want = (-t).exp()
            * match row[1].as_str() {
                "zeros" => 1.0 + b1 * e2 / (1.0 + 2.0 * b * b0),
                "ones" => 1.0 + b0 * e2 / (1.0 + 2.0 * b * b1),
                "mixed" => 1.0 - e2 / (2.0 * b),
                other => panic!("unknown pair {other}"),
            };
        assert!((f - want).abs() <= 1e-8, "{row:?} vs {want}");
    }
}

const FORWARD: &str = r#"
experiment = "forward-distance"
horizon = 3.0
times = [0.0, 0.5, 1.0]
replicates = 200
seed = 17
[model]
N = 6
B = 1.0
b0 = 0.5
S = 1.0
"#;

#[test]
fn outputs_are_reproducible_across_worker_counts() {
    let mut hashes = Vec::new();
    for workers in [1, 1, 4] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(FORWARD, dir.path());
        cfg.workers = Some(workers);
        run_experiment(&cfg).unwrap();
        let manifest = RunManifest::load(dir.path()).unwrap();
        assert_eq!(manifest.experiment, "forward-distance");
        hashes.push((manifest.config_hash, manifest.outputs));
    }
    assert_eq!(hashes[0], hashes[1]);
    assert_eq!(hashes[0], hashes[2]);
}

#[test]
fn failed_run_leaves_no_manifest() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config(FORWARD, dir.path())).unwrap();
    assert!(dir.path().join(MANIFEST_NAME).exists());
    let mut cfg = config(FORWARD, dir.path());
    cfg.horizon = None;
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(err.key, "horizon");
    assert!(!err.is_numerical_budget());
    assert!(!dir.path().join(MANIFEST_NAME).exists());
}

#[test]
fn invalid_grid_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(FORWARD, dir.path());
    cfg.times = vec![0.0, 1.0, 0.5];
    assert_eq!(run_experiment(&cfg).unwrap_err().key, "times");
}

#[test]
fn plotdata_series_layout() {
    let series = vec![("a".to_string(), vec![(0.0, 1.0), (1.0, 0.5)]), ("b".to_string(), vec![(2.0, 0.25)])];
    let csv = emit_plotdata(PlotSource::Series(&series)).unwrap();
    assert_eq!(csv.lines().next(), Some("series,x,y"));
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(3).unwrap().starts_with("b,2,"));
    assert!(emit_plotdata(PlotSource::Series(&[])).is_err());
}

fn cli(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_histmoran")).args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, FORWARD.replace("replicates = 200", "replicates = 10")).unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(cli(&["forward-distance", "--config", good.to_str().unwrap(), "--out", out, "--workers", "2"]), 0);
    assert!(Path::new(out).join(MANIFEST_NAME).exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, FORWARD.replace("[0.0, 0.5, 1.0]", "[1.0, 0.5]")).unwrap();
    assert_eq!(cli(&["forward-distance", "--config", bad.to_str().unwrap(), "--out", out]), 2);
    assert_eq!(cli(&["survival-table", "--config", good.to_str().unwrap(), "--out", out]), 2);
}
