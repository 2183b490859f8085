use super::{CatChainSpec, DistChainSpec, Pair};
use crate::backward::{full_set, prefix_set, BpState};
use crate::error::{Error, Result};
use crate::exact::expm_apply_left;
use crate::params::{ModelParams, Type};
use crate::stationary::finite_stationary_law;
use crate::transformed::HTransformedKernel;

/// Largest gap between the law of a reduced chain and the matching
/// functional of the transformed backward process.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainComparison {
    pub n: usize,
    pub selection: f64,
    pub t: f64,
    /// Start label: the mark for the CAT chain, the pair label for distances.
    pub start: String,
    /// Max over reduced states of the difference of probabilities.
    pub max_gap: f64,
    /// For distances: survival from the reduced chain and from the BP.
    pub survival: Option<(f64, f64)>,
}

/// Number of active sites carrying `{0}`, or `None` when an active site
/// holds a set other than `K` or `{0}`.
fn zero_active(s: &BpState) -> Option<usize> {
    let mut count = 0;
    for site in s.active_sites() {
        match s.active[site] {
            a if a == prefix_set(0) => count += 1,
            a if a == full_set(2) => {}
            _ => return None,
        }
    }
    Some(count)
}

fn two_type_check(p: &ModelParams) -> Result<()> {
    if p.d != 2 {
        return Err(Error::InvalidParams("reduced chains are defined for two types".into()));
    }
    Ok(())
}

/// Law at `t` of the CAT chain from `(u, 0)` against the lumped law of the
/// homogeneous transformed process with one tagged site of type `u`.
pub fn cat_chain_vs_bp(p: &ModelParams, u: Type, t: f64) -> Result<ChainComparison> {
    two_type_check(p)?;
    let law = finite_stationary_law(p)?;
    let kernel = HTransformedKernel::homogeneous(p, &[0], &law)?;
    let gbar = kernel.transformed_generator()?;
    let start = BpState::canonical_start(p, &[u])?;
    let mut delta = vec![0.0; gbar.len()];
    delta[kernel.chain.position(&start).expect("start is reachable")] = 1.0;
    let bp_law = expm_apply_left(&gbar, &delta, t)?;

    let spec = CatChainSpec::finite(p)?;
    let mut lumped = vec![0.0; spec.len()];
    let mut stray = 0.0;
    for (s, w) in kernel.chain.states.iter().zip(&bp_law) {
        match zero_active(s) {
            Some(n) if n <= spec.top => lumped[spec.index((s.marks[0].0, n))] += w,
            _ => stray += w.abs(),
        }
    }
    let mut init = vec![0.0; spec.len()];
    init[spec.index((u, 0))] = 1.0;
    let y_law = expm_apply_left(&spec.generator(), &init, t)?;
    let max_gap = lumped.iter().zip(&y_law).map(|(a, b)| (a - b).abs()).fold(stray, f64::max);
    Ok(ChainComparison { n: p.n, selection: p.selection, t, start: u.to_string(), max_gap, survival: None })
}

/// Sub-probability law at `t` of the distance chain from `(y, 0)` against
/// the lumped law of the homogeneous transformed process with two tagged
/// sites, killed when they coalesce.
pub fn dist_chain_vs_bp(p: &ModelParams, y: Pair, t: f64) -> Result<ChainComparison> {
    two_type_check(p)?;
    let law = finite_stationary_law(p)?;
    let kernel = HTransformedKernel::homogeneous(p, &[0, 1], &law)?;
    let gbar = kernel.transformed_generator()?;
    let keep: Vec<bool> = kernel.chain.states.iter().map(|s| s.marks[0].1 != s.marks[1].1).collect();
    let (sub, old) = gbar.restricted(&keep);
    let [a, b] = y.types();
    let start = BpState::canonical_start(p, &[a, b])?;
    let start_old = kernel.chain.position(&start).expect("start is reachable");
    let mut delta = vec![0.0; sub.len()];
    delta[old.iter().position(|&i| i == start_old).expect("start not coalesced")] = 1.0;
    let bp_law = expm_apply_left(&sub, &delta, t)?;

    let spec = DistChainSpec::finite(p)?;
    let mut lumped = vec![0.0; spec.len()];
    let mut stray = 0.0;
    for (&i, w) in old.iter().zip(&bp_law) {
        let s = &kernel.chain.states[i];
        let pair = Pair::from_types(s.marks[0].0, s.marks[1].0);
        match zero_active(s) {
            Some(n) if n <= spec.top => lumped[spec.index((pair, n))] += w,
            _ => stray += w.abs(),
        }
    }
    let mut init = vec![0.0; spec.len()];
    init[spec.index((y, 0))] = 1.0;
    let y_law = expm_apply_left(&spec.generator(), &init, t)?;
    let max_gap = lumped.iter().zip(&y_law).map(|(a, b)| (a - b).abs()).fold(stray, f64::max);
    let survival = (y_law.iter().sum(), bp_law.iter().sum());
    Ok(ChainComparison {
        n: p.n,
        selection: p.selection,
        t,
        start: y.label().to_string(),
        max_gap,
        survival: Some(survival),
    })
}
