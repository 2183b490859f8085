//! Runs every example binary. `cargo test` builds them next to the test
//! executables, under `<target>/<profile>/examples`.
use std::path::PathBuf;
use std::process::Command;

const EXAMPLES: [&str; 7] = [
    "model_core",
    "forward_hmm",
    "backward_process",
    "exact_duality",
    "transformed_bp",
    "reduced_chains",
    "run_experiment",
];

fn examples_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|deps| deps.parent()).unwrap().join("examples")
}

#[test]
fn every_example_runs() {
    let dir = examples_dir();
    for name in EXAMPLES {
        let path = dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
        assert!(path.exists(), "{} not built", path.display());
        let out = Command::new(&path).output().unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}
