use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{validate_params, ModelParams, Type};

/// The experiment kinds, one per CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DualitySweep,
    ForwardDistance,
    ConditionedDistance,
    CatEquilibrium,
    SurvivalTable,
    TaylorReport,
    CrossCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DualitySweep => "duality-sweep",
            ExperimentKind::ForwardDistance => "forward-distance",
            ExperimentKind::ConditionedDistance => "conditioned-distance",
            ExperimentKind::CatEquilibrium => "cat-equilibrium",
            ExperimentKind::SurvivalTable => "survival-table",
            ExperimentKind::TaylorReport => "taylor-report",
            ExperimentKind::CrossCheck => "cross-check",
        }
    }
}

/// The `[model]` table. Either a full kernel `b` (row-major `d x d`) or,
/// for two types, the shorthand `b0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "two")]
    pub d: usize,
    #[serde(rename = "B")]
    pub mutation_rate: f64,
    #[serde(rename = "S", default)]
    pub selection: f64,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub b0: Option<f64>,
    #[serde(default)]
    pub chi: Option<Vec<f64>>,
}

fn two() -> usize {
    2
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams> {
        let b = match (&self.b, self.b0) {
            (Some(b), None) => b.clone(),
            (None, Some(b0)) if self.d == 2 => vec![b0, 1.0 - b0, b0, 1.0 - b0],
            (None, Some(_)) => return Err(Error::InvalidParams("b0 shorthand needs d = 2".into())),
            (None, None) => vec![1.0 / self.d as f64; self.d * self.d],
            (Some(_), Some(_)) => return Err(Error::InvalidParams("give either b or b0, not both".into())),
        };
        let chi =
            self.chi.clone().unwrap_or_else(|| if self.d > 1 { ModelParams::linear_chi(self.d) } else { vec![0.0] });
        validate_params(ModelParams {
            n: self.n,
            d: self.d,
            mutation_rate: self.mutation_rate,
            b,
            selection: self.selection,
            chi,
        })
    }
}

/// A batch experiment read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    /// May be omitted when the CLI subcommand names the kind.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    /// Horizon `T` of the forward or conditioned runs.
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Strictly increasing time grid.
    pub times: Vec<f64>,
    #[serde(default = "one")]
    pub replicates: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Types of the tagged sites `0, 1, ..` (conditioned runs, duality).
    #[serde(default)]
    pub tagged_types: Option<Vec<Type>>,
    /// Single-site type law `nu` of the product initial law at `-T`;
    /// uniform when omitted.
    #[serde(default)]
    pub initial_law: Option<Vec<f64>>,
    /// Starting truncation level of the limit chains.
    #[serde(default)]
    pub n_max: Option<usize>,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn one() -> u64 {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn config_err(key: &str, msg: impl ToString) -> Error {
    Error::Config { key: key.into(), msg: msg.to_string() }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err("<file>", e.message()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment.ok_or_else(|| config_err("experiment", "no experiment kind given"))
    }

    /// Checks the invariants and returns the validated model.
    pub fn validate(&self) -> Result<ModelParams> {
        let p = self.model.params().map_err(|e| config_err("model", e))?;
        self.kind()?;
        if self.replicates < 1 {
            return Err(config_err("replicates", "must be at least 1"));
        }
        if self.times.is_empty() {
            return Err(config_err("times", "grid is empty"));
        }
        if self.times[0] < 0.0 || self.times.iter().any(|t| !t.is_finite()) {
            return Err(config_err("times", "times must be finite and nonnegative"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_err("times", "grid must be strictly increasing"));
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return Err(config_err("horizon", "must be positive"));
            }
        }
        if let Some(xi) = &self.tagged_types {
            if xi.is_empty() || xi.len() > p.n || xi.iter().any(|&u| u >= p.d) {
                return Err(config_err("tagged_types", "need 1..=N types, each below d"));
            }
        }
        if let Some(nu) = &self.initial_law {
            if nu.len() != p.d || nu.iter().any(|&x| x < 0.0) || (nu.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(config_err("initial_law", "must be a probability vector of length d"));
            }
        }
        if self.workers == Some(0) {
            return Err(config_err("workers", "must be at least 1"));
        }
        Ok(p)
    }

    pub(crate) fn horizon_or_err(&self) -> Result<f64> {
        self.horizon.ok_or_else(|| config_err("horizon", "required for this experiment"))
    }

    pub(crate) fn nu(&self, d: usize) -> Vec<f64> {
        self.initial_law.clone().unwrap_or_else(|| vec![1.0 / d as f64; d])
    }
}
