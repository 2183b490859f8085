use std::fmt::Write as _;

use super::chains::{all_canonical_starts, build_bp_generator, build_type_generator, BpChain, TypeChain};
use super::generator::expm_apply;
use crate::backward::BpState;
use crate::error::{Error, Result};
use crate::params::{ModelParams, Site};
use crate::stationary::StationaryTypeLaw;

/// Both sides of the Feynman-Kac duality for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub n: usize,
    pub d: usize,
    pub mutation_rate: f64,
    pub selection: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
}

/// Type chain and backward chain built once for repeated duality checks.
pub struct DualitySetup {
    pub params: ModelParams,
    pub types: TypeChain,
    pub bp: BpChain,
    start: usize,
}

impl DualitySetup {
    pub fn new(p: &ModelParams, eta: &BpState) -> Result<Self> {
        let types = build_type_generator(p)?;
        let bp = build_bp_generator(p, std::slice::from_ref(eta))?;
        Ok(DualitySetup { params: p.clone(), types, bp, start: 0 })
    }

    /// `E_mu[H*(X_t, eta)]` against `E_eta[E_mu[H*(X_0, Xbar_t)] e^{int_0^t V}]`.
    pub fn report(&self, mu: &[f64], t: f64) -> Result<DualityReport> {
        let p = &self.params;
        if mu.len() != self.types.len() {
            return Err(Error::LengthMismatch { expected: self.types.len(), got: mu.len() });
        }
        let eta = &self.bp.states[self.start];
        let law = self.types.law_at(mu, t)?;
        let lhs: f64 = law.iter().enumerate().filter(|&(idx, _)| eta.h_star_index(idx, p.d)).map(|(_, w)| w).sum();
        let g = self.bp.h_star_expectation(mu, p.d);
        let rhs = expm_apply(&self.bp.fk_generator(), &g, t)?[self.start];
        Ok(DualityReport {
            n: p.n,
            d: p.d,
            mutation_rate: p.mutation_rate,
            selection: p.selection,
            t,
            lhs,
            rhs,
            abs_gap: (lhs - rhs).abs(),
        })
    }
}

/// One exact duality check; `mu` is a law on `K^I` indexed by
/// `sum_i eta_i d^i`.
pub fn check_duality(p: &ModelParams, mu: &[f64], eta: &BpState, t: f64) -> Result<DualityReport> {
    DualitySetup::new(p, eta)?.report(mu, t)
}

/// CSV with header `N,d,B,S,t,lhs,rhs,gap`.
pub fn duality_reports_csv(reports: &[DualityReport]) -> String {
    let mut out = String::from("N,d,B,S,t,lhs,rhs,gap\n");
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{:.17e},{:.17e},{:.3e}",
            r.n, r.d, r.mutation_rate, r.selection, r.t, r.lhs, r.rhs, r.abs_gap
        )
        .unwrap();
    }
    out
}

/// The stationary potential `h = E_pi[H*(., eta)]` on every state reachable
/// from the canonical starts of the tagged sites.
#[derive(Debug, Clone)]
pub struct HTable {
    pub chain: BpChain,
    pub h: Vec<f64>,
    /// `|(Lbar + V) h|_inf`.
    pub harmonic_residual: f64,
}

impl HTable {
    pub fn get(&self, s: &BpState) -> Option<f64> {
        self.chain.position(s).map(|k| self.h[k])
    }
}

/// Smallest admissible potential value.
pub const POSITIVITY_FLOOR: f64 = 1e-14;

pub fn compute_h(p: &ModelParams, sites: &[Site], law: &StationaryTypeLaw) -> Result<HTable> {
    if !(p.mutation_rate > 0.0) || !p.kernel_irreducible() {
        return Err(Error::NoUniqueStationaryLaw("B > 0 and irreducible b required".into()));
    }
    let chain = build_bp_generator(p, &all_canonical_starts(p, sites)?)?;
    let pi = law.configuration_law();
    let h = chain.h_star_expectation(&pi, p.d);
    if let Some((k, &v)) = h.iter().enumerate().find(|(_, &v)| v <= POSITIVITY_FLOOR) {
        return Err(Error::PositivityViolated(format!("h = {v:e} at {}", chain.states[k])));
    }
    let harmonic_residual = chain.fk_generator().apply(&h).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(HTable { chain, h, harmonic_residual })
}

/// `h^T(t, eta) = E_mu[H*(X_{T-t}, eta)]`.
pub fn compute_ht(p: &ModelParams, mu: &[f64], horizon: f64, t: f64, eta: &BpState) -> Result<f64> {
    if !(0.0 <= t && t < horizon) {
        return Err(Error::OutOfRange(format!("need 0 <= t < T, got t = {t}, T = {horizon}")));
    }
    let chain = build_type_generator(p)?;
    let law = chain.law_at(mu, horizon - t)?;
    let value: f64 = law.iter().enumerate().filter(|&(idx, _)| eta.h_star_index(idx, p.d)).map(|(_, w)| w).sum();
    if value <= 0.0 {
        return Err(Error::PositivityViolated(format!("h^T({t}) = {value:e} at {eta}")));
    }
    Ok(value)
}

/// Product law `nu^{(x) N}` on `K^I`.
pub fn product_law(nu: &[f64], n: usize) -> Vec<f64> {
    let d = nu.len();
    (0..d.pow(n as u32))
        .map(|mut idx| {
            let mut w = 1.0;
            for _ in 0..n {
                w *= nu[idx % d];
                idx /= d;
            }
            w
        })
        .collect()
}
