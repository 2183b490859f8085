//! Builds a survival-table experiment from TOML and runs it into a
//! scratch directory, printing the manifest.
use histmoran::experiments::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"
experiment = "survival-table"
times = [0.0, 0.5, 1.0, 2.0]
[model]
N = 50
B = 1.0
b0 = 0.5
S = 1.0
"#;

fn main() -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::from_toml(CONFIG)?;
    cfg.output_dir = std::env::temp_dir().join("histmoran-example");
    let manifest = run_experiment(&cfg)?;
    println!("wrote {} files to {}", manifest.outputs.len(), cfg.output_dir.display());
    for out in &manifest.outputs {
        println!("  {} {}", out.sha256, out.name);
    }
    Ok(())
}
