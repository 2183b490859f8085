//! Batch experiments: TOML configuration, seeded and parallel replication,
//! CSV outputs and a manifest with checksums.

mod config;
mod plot;
mod run;

pub use config::{ExperimentConfig, ExperimentKind, ModelSection};
pub use plot::{emit_plotdata, PlotSource};
pub use run::{run_experiment, ExperimentError, OutputFile, RunManifest, MANIFEST_NAME};
