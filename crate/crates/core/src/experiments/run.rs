use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{emit_plotdata, ExperimentConfig, ExperimentKind, PlotSource};
use crate::backward::BpState;
use crate::error::Error;
use crate::exact::{all_canonical_starts, build_bp_generator, duality_reports_csv, product_law, DualitySetup};
use crate::forward::{init_forest, run_until, sample_iid_types, sample_stationary_types};
use crate::params::ModelParams;
use crate::reduced::{
    cat_chain_vs_bp, cat_equilibrium, dist_chain_vs_bp, dist_survival_adaptive, dist_taylor_coeffs, CatChainSpec,
    DistChainSpec, Pair,
};
use crate::rng::stream;
use crate::stationary::finite_stationary_law;
use crate::transformed::{mean_se, HTransformedKernel};

pub const MANIFEST_NAME: &str = "manifest.toml";
const DEFAULT_N_MAX: usize = 16;

/// A failed run: the config key it concerns and the underlying error.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} failed at `{key}`")]
pub struct ExperimentError {
    pub kind: &'static str,
    pub key: String,
    #[source]
    pub source: Error,
}

impl ExperimentError {
    /// Whether the failure is a numerical budget (truncation, state cap,
    /// positivity floor) rather than invalid input.
    pub fn is_numerical_budget(&self) -> bool {
        matches!(
            self.source,
            Error::TruncationBudget { .. }
                | Error::ExactSolveInfeasible { .. }
                | Error::PositivityViolated(_)
                | Error::Singular
                | Error::ZeroProbabilityConditioning
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub toolkit_version: String,
    pub wall_time_secs: f64,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> crate::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        toml::from_str(&text).map_err(|e| Error::Io(e.to_string()))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file and a rename, so readers never see a
/// partial file.
fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path)
}

/// Hash of the configuration, ignoring fields that do not change results
/// (worker count and output location).
fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.workers = None;
    canonical.output_dir = Default::default();
    sha256_hex(canonical.to_toml().as_bytes())
}

/// Validates `cfg`, runs it, writes every CSV into `cfg.output_dir` and
/// finally the manifest. A failed run leaves no manifest behind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest, ExperimentError> {
    let kind_name = cfg.experiment.map_or("experiment", |k| k.name());
    let fail =
        |key: &'static str| move |source: Error| ExperimentError { kind: kind_name, key: key.to_string(), source };
    let p = cfg.validate().map_err(|e| match e {
        Error::Config { key, msg } => {
            ExperimentError { kind: kind_name, key: key.clone(), source: Error::Config { key, msg } }
        }
        other => fail("model")(other),
    })?;
    let kind = cfg.kind().map_err(fail("experiment"))?;
    let start = Instant::now();

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| fail("output_dir")(e.into()))?;
    let manifest_path = dir.join(MANIFEST_NAME);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| fail("output_dir")(e.into()))?;
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool =
        builder.build().map_err(|e| fail("workers")(Error::Config { key: "workers".into(), msg: e.to_string() }))?;
    let outputs = pool.install(|| dispatch(kind, cfg, &p))?;

    let mut files = Vec::with_capacity(outputs.len());
    for (name, body) in &outputs {
        write_atomic(&dir.join(name), body).map_err(|e| fail("output_dir")(e.into()))?;
        files.push(OutputFile { name: name.clone(), sha256: sha256_hex(body.as_bytes()) });
    }
    let manifest = RunManifest {
        experiment: kind.name().to_string(),
        config_hash: config_hash(cfg),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        outputs: files,
    };
    let text = toml::to_string(&manifest).expect("manifest serializes");
    write_atomic(&manifest_path, &text).map_err(|e| fail("output_dir")(e.into()))?;
    Ok(manifest)
}

type Outputs = Vec<(String, String)>;

fn dispatch(kind: ExperimentKind, cfg: &ExperimentConfig, p: &ModelParams) -> Result<Outputs, ExperimentError> {
    let wrap = |key: &'static str| move |source: Error| ExperimentError { kind: kind.name(), key: key.into(), source };
    match kind {
        ExperimentKind::DualitySweep => duality_sweep(cfg, p).map_err(wrap("model")),
        ExperimentKind::ForwardDistance => {
            let horizon = cfg.horizon_or_err().map_err(wrap("horizon"))?;
            forward_distance(cfg, p, horizon).map_err(wrap("model"))
        }
        ExperimentKind::ConditionedDistance => {
            let horizon = cfg.horizon_or_err().map_err(wrap("horizon"))?;
            conditioned_distance(cfg, p, horizon).map_err(wrap("tagged_types"))
        }
        ExperimentKind::CatEquilibrium => cat_report(cfg, p).map_err(wrap("n_max")),
        ExperimentKind::SurvivalTable => survival_report(cfg, p).map_err(wrap("n_max")),
        ExperimentKind::TaylorReport => taylor_report(cfg, p).map_err(wrap("n_max")),
        ExperimentKind::CrossCheck => cross_check(cfg, p).map_err(wrap("model")),
    }
}

/// Tagged sites: as many as `tagged_types`, otherwise two (or one for `N = 1`).
fn tagged_sites(cfg: &ExperimentConfig, p: &ModelParams) -> Vec<usize> {
    let k = cfg.tagged_types.as_ref().map_or(p.n.min(2), |xi| xi.len());
    (0..k).collect()
}

fn duality_sweep(cfg: &ExperimentConfig, p: &ModelParams) -> crate::Result<Outputs> {
    let sites = tagged_sites(cfg, p);
    let chain = build_bp_generator(p, &all_canonical_starts(p, &sites)?)?;
    let configs = p.d.pow(p.n as u32);
    let cases: Vec<(BpState, Vec<f64>)> = (0..cfg.replicates)
        .map(|r| {
            let mut rng = stream(cfg.seed, r);
            let eta = chain.states[rng.random_range(0..chain.len())].clone();
            let mut mu: Vec<f64> = (0..configs).map(|_| rng.random::<f64>()).collect();
            let total: f64 = mu.iter().sum();
            mu.iter_mut().for_each(|x| *x /= total);
            (eta, mu)
        })
        .collect();
    let reports = cases
        .par_iter()
        .map(|(eta, mu)| {
            let setup = DualitySetup::new(p, eta)?;
            cfg.times.iter().map(|&t| setup.report(mu, t)).collect::<crate::Result<Vec<_>>>()
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let flat: Vec<_> = reports.into_iter().flatten().collect();
    Ok(vec![("duality.csv".into(), duality_reports_csv(&flat))])
}

fn survival_csv(times: &[f64], hits: &[Vec<bool>]) -> (String, Vec<(f64, f64)>) {
    let mut out = String::from("t,estimate,se\n");
    let mut pts = Vec::with_capacity(times.len());
    for (k, t) in times.iter().enumerate() {
        let xs: Vec<f64> = hits.iter().map(|h| f64::from(u8::from(h[k]))).collect();
        let (m, se) = mean_se(&xs);
        writeln!(out, "{t},{m:.17e},{se:.17e}").unwrap();
        pts.push((*t, m));
    }
    (out, pts)
}

fn forward_distance(cfg: &ExperimentConfig, p: &ModelParams, horizon: f64) -> crate::Result<Outputs> {
    let law = if p.mutation_rate > 0.0 && p.kernel_irreducible() { Some(finite_stationary_law(p)?) } else { None };
    let nu = cfg.nu(p.d);
    if p.n < 2 {
        return Err(Error::InvalidParams("distances need N >= 2".into()));
    }
    let distances = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r);
            let types = match (&law, &cfg.initial_law) {
                (Some(law), None) => sample_stationary_types(law, &mut rng),
                _ => sample_iid_types(&nu, p.n, &mut rng),
            };
            let mut f = init_forest(p, -horizon, &types)?;
            run_until(&mut f, p, 0.0, &mut rng)?;
            Ok(f.genealogical_distance(0, 1))
        })
        .collect::<crate::Result<Vec<f64>>>()?;
    let mut raw = String::from("replicate,distance\n");
    for (r, d) in distances.iter().enumerate() {
        writeln!(raw, "{r},{d:.17e}").unwrap();
    }
    let hits: Vec<Vec<bool>> = distances.iter().map(|&d| cfg.times.iter().map(|&t| d > 2.0 * t).collect()).collect();
    let (survival, pts) = survival_csv(&cfg.times, &hits);
    let plot = emit_plotdata(PlotSource::Series(&[("forward-distance".to_string(), pts)]))?;
    Ok(vec![("distances.csv".into(), raw), ("survival.csv".into(), survival), ("plotdata.csv".into(), plot)])
}

fn conditioned_distance(cfg: &ExperimentConfig, p: &ModelParams, horizon: f64) -> crate::Result<Outputs> {
    let xi = cfg.tagged_types.clone().unwrap_or_else(|| vec![0, 0]);
    if xi.len() != 2 {
        return Err(Error::InvalidParams("conditioned distances need exactly two tagged types".into()));
    }
    let mu = match &cfg.initial_law {
        None if p.mutation_rate > 0.0 && p.kernel_irreducible() => finite_stationary_law(p)?.configuration_law(),
        _ => product_law(&cfg.nu(p.d), p.n),
    };
    let kernel = HTransformedKernel::inhomogeneous(p, &[0, 1], &mu, horizon)?;
    let start = BpState::canonical_start(p, &xi)?;
    let coalescence = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r);
            let path = kernel.simulate(&start, horizon, &mut rng)?;
            Ok(path.coalescence_time(0, 1))
        })
        .collect::<crate::Result<Vec<Option<f64>>>>()?;
    let hits: Vec<Vec<bool>> =
        coalescence.iter().map(|c| cfg.times.iter().map(|&t| c.is_none_or(|c| c > t)).collect()).collect();
    let (survival, pts) = survival_csv(&cfg.times, &hits);
    let plot = emit_plotdata(PlotSource::Series(&[("conditioned-coalescence".to_string(), pts)]))?;
    Ok(vec![("survival.csv".into(), survival), ("plotdata.csv".into(), plot)])
}

fn cat_report(cfg: &ExperimentConfig, p: &ModelParams) -> crate::Result<Outputs> {
    let finite = cat_equilibrium(&CatChainSpec::finite(p)?)?;
    let (_, limit) = CatChainSpec::limit_adaptive(p, cfg.n_max.unwrap_or(DEFAULT_N_MAX))?;
    Ok(vec![
        ("equilibrium_finite.csv".into(), finite.to_csv()),
        ("equilibrium_limit.csv".into(), limit.to_csv()),
        ("plotdata_finite.csv".into(), emit_plotdata(PlotSource::Equilibrium(&finite))?),
        ("plotdata_limit.csv".into(), emit_plotdata(PlotSource::Equilibrium(&limit))?),
    ])
}

fn survival_report(cfg: &ExperimentConfig, p: &ModelParams) -> crate::Result<Outputs> {
    let (_, table) = dist_survival_adaptive(p, &cfg.times, cfg.n_max.unwrap_or(DEFAULT_N_MAX))?;
    Ok(vec![
        ("survival.csv".into(), table.to_csv()),
        ("pf.csv".into(), table.pf_csv(10)),
        ("plotdata.csv".into(), emit_plotdata(PlotSource::Survival(&table))?),
    ])
}

fn taylor_report(cfg: &ExperimentConfig, p: &ModelParams) -> crate::Result<Outputs> {
    let spec = DistChainSpec::limit(p, cfg.n_max.unwrap_or(DEFAULT_N_MAX).max(3))?;
    Ok(vec![("taylor.csv".into(), dist_taylor_coeffs(&spec, 3)?.to_csv())])
}

fn cross_check(cfg: &ExperimentConfig, p: &ModelParams) -> crate::Result<Outputs> {
    let mut out = String::from("chain,start,t,max_gap\n");
    for &t in &cfg.times {
        for u in 0..2 {
            let c = cat_chain_vs_bp(p, u, t)?;
            writeln!(out, "cat,{},{t},{:.6e}", c.start, c.max_gap).unwrap();
        }
        for y in Pair::ALL {
            let c = dist_chain_vs_bp(p, y, t)?;
            writeln!(out, "dist,{},{t},{:.6e}", c.start, c.max_gap).unwrap();
        }
    }
    Ok(vec![("crosscheck.csv".into(), out)])
}
