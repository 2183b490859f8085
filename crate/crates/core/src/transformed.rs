//! The h-transformed backward process: rates `K(eta, zeta) h(zeta) / h(eta)`
//! with the stationary potential `h` or the time-space potential `h^T`.
//! Its reversed paths are the extended ancestral lines conditioned on the
//! types of the tagged sites at Time 0.

use rand::Rng;

use crate::backward::{enumerate_transitions, reverse_to_lines, BpKind, BpPath, BpState, BpTransition};
use crate::error::{Error, Result};
use crate::exact::{
    all_canonical_starts, build_bp_generator, build_type_generator, compute_h, expm_apply_left, BpChain,
    GeneratorMatrix, POSITIVITY_FLOOR,
};
use crate::forward::{init_forest, run_until};
use crate::lines::AncestralLine;
use crate::params::{ModelParams, Site, Type};
use crate::rng::{exponential, pick_weighted, stream};
use crate::stationary::StationaryTypeLaw;

/// Grid step for the time-space potential.
pub const HT_GRID_STEP: f64 = 1e-3;
/// Safety factor on the thinning bound, covering interpolation between grid points.
const THINNING_SLACK: f64 = 1.25;

/// `h^T(t, .)` on an equidistant grid `t_k = k T / K`, linearly interpolated.
#[derive(Debug, Clone)]
pub struct HtGrid {
    pub horizon: f64,
    pub step: f64,
    /// `values[k][state]`.
    pub values: Vec<Vec<f64>>,
}

impl HtGrid {
    fn at(&self, state: usize, t: f64) -> f64 {
        let x = (t / self.step).clamp(0.0, (self.values.len() - 1) as f64);
        let k = (x.floor() as usize).min(self.values.len() - 2);
        let w = x - k as f64;
        (1.0 - w) * self.values[k][state] + w * self.values[k + 1][state]
    }
}

#[derive(Debug, Clone)]
pub enum Potential {
    Homogeneous(Vec<f64>),
    Inhomogeneous(HtGrid),
}

/// Base transitions of every reachable state together with a potential.
#[derive(Debug, Clone)]
pub struct HTransformedKernel {
    pub params: ModelParams,
    pub sites: Vec<Site>,
    pub chain: BpChain,
    pub potential: Potential,
    /// Per state: `(target, base rate, kind)`.
    moves: Vec<Vec<(usize, f64, BpKind)>>,
    /// Per state: dominating total rate for thinning.
    bound: Vec<f64>,
}

impl HTransformedKernel {
    fn from_parts(p: &ModelParams, sites: &[Site], chain: BpChain, potential: Potential) -> Result<Self> {
        let moves: Vec<Vec<(usize, f64, BpKind)>> = chain
            .states
            .iter()
            .map(|s| {
                enumerate_transitions(s, p).into_iter().map(|tr| (chain.index[&tr.target], tr.rate, tr.kind)).collect()
            })
            .collect();
        let mut kernel =
            HTransformedKernel { params: p.clone(), sites: sites.to_vec(), chain, potential, moves, bound: Vec::new() };
        kernel.bound = (0..kernel.chain.len())
            .map(|k| match &kernel.potential {
                Potential::Homogeneous(_) => kernel.total_rate(k, 0.0),
                Potential::Inhomogeneous(g) => {
                    let max = (0..g.values.len()).map(|i| kernel.total_rate(k, i as f64 * g.step)).fold(0.0, f64::max);
                    THINNING_SLACK * max
                }
            })
            .collect();
        Ok(kernel)
    }

    /// Time-homogeneous kernel with the stationary potential.
    pub fn homogeneous(p: &ModelParams, sites: &[Site], law: &StationaryTypeLaw) -> Result<Self> {
        let table = compute_h(p, sites, law)?;
        Self::from_parts(p, sites, table.chain, Potential::Homogeneous(table.h))
    }

    /// Time-inhomogeneous kernel for the initial type law `mu` on `K^I` at
    /// Time `-T`.
    pub fn inhomogeneous(p: &ModelParams, sites: &[Site], mu: &[f64], horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::OutOfRange(format!("horizon {horizon} must be positive")));
        }
        let chain = build_bp_generator(p, &all_canonical_starts(p, sites)?)?;
        let types = build_type_generator(p)?;
        if mu.len() != types.len() {
            return Err(Error::LengthMismatch { expected: types.len(), got: mu.len() });
        }
        let steps = (horizon / HT_GRID_STEP).ceil() as usize;
        let step = horizon / steps as f64;
        let support = chain.h_star_support(p.n, p.d);
        // law of the types at Time -T + s for s = 0, step, .., T
        let mut laws = Vec::with_capacity(steps + 1);
        let mut law = mu.to_vec();
        laws.push(law.clone());
        for _ in 0..steps {
            law = expm_apply_left(&types.gen, &law, step)?;
            laws.push(law.clone());
        }
        // h^T(t_k) uses the law at elapsed time T - t_k
        let values: Vec<Vec<f64>> = (0..=steps)
            .map(|k| {
                let law = &laws[steps - k];
                support.iter().map(|idx| idx.iter().map(|&i| law[i]).sum()).collect()
            })
            .collect();
        for (k, row) in values.iter().enumerate() {
            if let Some((s, &v)) = row.iter().enumerate().find(|(_, &v)| v <= POSITIVITY_FLOOR) {
                return Err(Error::PositivityViolated(format!(
                    "h^T({}) = {v:e} at {}",
                    k as f64 * step,
                    chain.states[s]
                )));
            }
        }
        Self::from_parts(p, sites, chain, Potential::Inhomogeneous(HtGrid { horizon, step, values }))
    }

    pub fn horizon(&self) -> Option<f64> {
        match &self.potential {
            Potential::Homogeneous(_) => None,
            Potential::Inhomogeneous(g) => Some(g.horizon),
        }
    }

    /// Potential at state index `k` and time `t`.
    pub fn h(&self, k: usize, t: f64) -> f64 {
        match &self.potential {
            Potential::Homogeneous(h) => h[k],
            Potential::Inhomogeneous(g) => g.at(k, t),
        }
    }

    fn total_rate(&self, k: usize, t: f64) -> f64 {
        let hk = self.h(k, t);
        self.moves[k].iter().map(|&(j, r, _)| r * self.h(j, t) / hk).sum()
    }

    /// Transformed transitions out of `s` at time `t`.
    pub fn transformed_rates(&self, s: &BpState, t: f64) -> Result<Vec<BpTransition>> {
        if let Some(horizon) = self.horizon() {
            if !(t < horizon) {
                return Err(Error::OutOfRange(format!("time {t} must be below T = {horizon}")));
            }
        }
        let k = self
            .chain
            .position(s)
            .ok_or_else(|| Error::InvalidParams(format!("state {s} not reachable from the tagged starts")))?;
        let hk = self.h(k, t);
        if hk <= 0.0 {
            return Err(Error::PositivityViolated(format!("h = {hk:e} at {s}")));
        }
        Ok(self.moves[k]
            .iter()
            .map(|&(j, r, kind)| BpTransition {
                target: self.chain.states[j].clone(),
                rate: r * self.h(j, t) / hk,
                kind,
            })
            .collect())
    }

    /// Generator of the time-homogeneous transformed process on the
    /// reachable states.
    pub fn transformed_generator(&self) -> Result<GeneratorMatrix> {
        let h = match &self.potential {
            Potential::Homogeneous(h) => h,
            Potential::Inhomogeneous(_) => {
                return Err(Error::InvalidParams("time-inhomogeneous kernel has no single generator".into()))
            }
        };
        let triples =
            self.moves.iter().enumerate().flat_map(|(k, m)| m.iter().map(move |&(j, r, _)| (k, j, r * h[j] / h[k])));
        Ok(GeneratorMatrix::from_triples(self.chain.len(), triples))
    }

    /// Exact law at time `s` of the transformed process started in
    /// `start`: `e^{s(Lbar+V)}(start, .) h(s, .) / h(0, start)`.
    pub fn exact_marginal(&self, start: &BpState, s: f64) -> Result<Vec<f64>> {
        let k0 =
            self.chain.position(start).ok_or_else(|| Error::InvalidParams(format!("state {start} not reachable")))?;
        let mut delta = vec![0.0; self.chain.len()];
        delta[k0] = 1.0;
        let row = expm_apply_left(&self.chain.fk_generator(), &delta, s)?;
        let h0 = self.h(k0, 0.0);
        Ok(row.iter().enumerate().map(|(j, w)| w * self.h(j, s) / h0).collect())
    }

    /// Simulates the transformed process from `start` up to `horizon`
    /// (for an inhomogeneous kernel, its own `T`), by thinning.
    pub fn simulate<R: Rng + ?Sized>(&self, start: &BpState, horizon: f64, rng: &mut R) -> Result<BpPath> {
        let horizon = self.horizon().unwrap_or(horizon);
        let mut k =
            self.chain.position(start).ok_or_else(|| Error::InvalidParams(format!("state {start} not reachable")))?;
        let mut path = BpPath { initial: start.clone(), events: Vec::new(), horizon };
        let mut now = 0.0;
        loop {
            let bound = self.bound[k];
            if bound <= 0.0 {
                return Ok(path);
            }
            now += exponential(rng, bound);
            if now >= horizon {
                return Ok(path);
            }
            let hk = self.h(k, now);
            let rates: Vec<f64> = self.moves[k].iter().map(|&(j, r, _)| r * self.h(j, now) / hk).collect();
            let total: f64 = rates.iter().sum();
            assert!(total <= bound * (1.0 + 1e-12), "thinning bound {bound} exceeded by {total}");
            if rng.random::<f64>() * bound >= total {
                continue;
            }
            let pick = pick_weighted(rng, rates.iter().copied(), total);
            let (j, _, kind) = self.moves[k][pick];
            path.events.push((now, BpTransition { target: self.chain.states[j].clone(), rate: rates[pick], kind }));
            k = j;
        }
    }
}

/// Conditioned extended ancestral lines of the tagged sites on Times
/// `[-T, 0]`, given their types `xi` at Time 0.
pub fn sample_conditioned_lines<R: Rng + ?Sized>(
    kernel: &HTransformedKernel,
    xi: &[Type],
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<AncestralLine>> {
    if !(horizon > 0.0) {
        return Err(Error::OutOfRange(format!("horizon {horizon} must be positive")));
    }
    let start = BpState::canonical_start_at(&kernel.params, &kernel.sites, xi)?;
    let path = kernel.simulate(&start, horizon, rng)?;
    Ok(reverse_to_lines(&path))
}

/// One factor `int_from^to F(line_tag(-s)) ds` of a path functional, with
/// `F` the indicator of `type_is` (or the constant 1 when `None`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineWindow {
    pub tag: usize,
    pub from: f64,
    pub to: f64,
    pub type_is: Option<Type>,
}

/// `prod_n int_{r_n}^{t_n} F_n(line(-s)) ds` on lines over `[-T, 0]`.
pub fn evaluate_functional(lines: &[AncestralLine], windows: &[LineWindow]) -> f64 {
    windows
        .iter()
        .map(|w| {
            let f = |v: &(Type, Site)| match w.type_is {
                None => 1.0,
                Some(u) => f64::from(u8::from(v.0 == u)),
            };
            lines[w.tag].integral(-w.to, -w.from, f)
        })
        .product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalCheck {
    /// Forward estimate of `E[F | types of J at Time 0 = xi]`.
    pub forward: f64,
    pub forward_se: f64,
    /// Accepted forward replicates (those hitting the conditioning event).
    pub forward_accepted: usize,
    /// Estimate from the transformed backward process.
    pub transformed: f64,
    pub transformed_se: f64,
    pub gap: f64,
    /// `gap` divided by the pooled standard error.
    pub z: f64,
}

/// Compares the conditioned functional estimated by forward simulation with
/// rejection on the types at Time 0 against the transformed backward process.
#[allow(clippy::too_many_arguments)]
pub fn conditioned_functional_check(
    p: &ModelParams,
    sites: &[Site],
    xi: &[Type],
    horizon: f64,
    mu: &[f64],
    windows: &[LineWindow],
    replicates: u64,
    seed: u64,
) -> Result<FunctionalCheck> {
    use rayon::prelude::*;

    let kernel = HTransformedKernel::inhomogeneous(p, sites, mu, horizon)?;
    // forward: (hit, F * hit)
    let forward: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<Option<f64>> {
            let mut rng = stream(seed, 2 * r);
            let idx = pick_weighted(&mut rng, mu.iter().copied(), 1.0);
            let eta = crate::exact::decode_config(idx, p.n, p.d);
            let mut f = init_forest(p, -horizon, &eta)?;
            run_until(&mut f, p, 0.0, &mut rng)?;
            let types = f.types();
            if sites.iter().zip(xi).any(|(&s, &u)| types[s] != u) {
                return Ok(None);
            }
            let lines: Vec<AncestralLine> = sites.iter().map(|&s| f.ancestral_line(s)).collect();
            Ok(Some(evaluate_functional(&lines, windows)))
        })
        .collect::<Result<_>>()?;
    let accepted: Vec<f64> = forward.into_iter().flatten().collect();
    if accepted.is_empty() {
        return Err(Error::ZeroProbabilityConditioning);
    }
    let backward: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng = stream(seed, 2 * r + 1);
            let lines = sample_conditioned_lines(&kernel, xi, horizon, &mut rng)?;
            Ok(evaluate_functional(&lines, windows))
        })
        .collect::<Result<_>>()?;
    let (fm, fse) = mean_se(&accepted);
    let (bm, bse) = mean_se(&backward);
    let gap = (fm - bm).abs();
    let pooled = (fse * fse + bse * bse).sqrt();
    Ok(FunctionalCheck {
        forward: fm,
        forward_se: fse,
        forward_accepted: accepted.len(),
        transformed: bm,
        transformed_se: bse,
        gap,
        z: if pooled > 0.0 {
            gap / pooled
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        },
    })
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
