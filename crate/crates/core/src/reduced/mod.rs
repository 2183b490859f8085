//! Two-type reduced chains obtained from the time-homogeneous transformed
//! backward process.
//!
//! `cat` holds the chain (mark, number of `{0}`-active sites) whose
//! equilibrium gives the stationary type law of the common ancestor type;
//! `dist` holds the chain for two tagged sites, absorbed when they
//! coalesce, whose survival function is the conditioned genealogical
//! distance tail. Both come in a finite-`N` mode weighted by `P_N` and in
//! the `N -> infinity` limit weighted by Wright-Fisher moments.

mod cat;
mod compare;
mod dist;

pub use cat::{cat_equilibrium, CatChainSpec, CatEquilibrium, CatState};
pub use compare::{cat_chain_vs_bp, dist_chain_vs_bp, ChainComparison};
pub use dist::{
    dist_survival, dist_survival_adaptive, dist_taylor_coeffs, lemma_ode_residual, pf_recursion_residual,
    DistChainSpec, DistState, Pair, SurvivalTable, TaylorReport, TRUNCATION_TOL,
};

use crate::error::Result;
use crate::moments::{wf_moment_strip, MixedMomentTable};
use crate::params::ModelParams;
use crate::stationary::{finite_stationary_law, pn_probability, StationaryTypeLaw};

/// Largest truncation level tried by the adaptive solvers.
pub const N_MAX_CAP: usize = 1024;

/// Where the sampling weights `W(1^n, 0^m)` come from.
#[derive(Debug, Clone)]
pub enum Weights {
    /// `P_N(1^n, 0^m)` of the finite population.
    FiniteN(StationaryTypeLaw),
    /// `E[1^n, 0^m]` of the Wright-Fisher diffusion.
    Limit(MixedMomentTable),
}

/// Model constants shared by both chains together with their weights.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub mutation_rate: f64,
    pub b0: f64,
    pub b1: f64,
    pub selection: f64,
    pub weights: Weights,
}

impl ReducedModel {
    pub fn finite(p: &ModelParams) -> Result<Self> {
        let (b0, b1) = p.parent_independent_two_type()?;
        let law = finite_stationary_law(p)?;
        Ok(ReducedModel {
            mutation_rate: p.mutation_rate,
            b0,
            b1,
            selection: p.selection,
            weights: Weights::FiniteN(law),
        })
    }

    /// Limit weights with moments up to total order `max_order`.
    pub fn limit(p: &ModelParams, max_order: usize) -> Result<Self> {
        let (b0, b1) = p.parent_independent_two_type()?;
        let table = wf_moment_strip(p, max_order, 2)?;
        Ok(ReducedModel {
            mutation_rate: p.mutation_rate,
            b0,
            b1,
            selection: p.selection,
            weights: Weights::Limit(table),
        })
    }

    /// Population size in finite mode.
    pub fn population(&self) -> Option<usize> {
        match &self.weights {
            Weights::FiniteN(law) => Some(law.n),
            Weights::Limit(_) => None,
        }
    }

    /// `W(1^ones, 0^zeros)`.
    pub fn w(&self, ones: usize, zeros: usize) -> f64 {
        match &self.weights {
            Weights::FiniteN(law) => pn_probability(law, ones, zeros).expect("sample within population"),
            Weights::Limit(t) => t.e(ones, zeros),
        }
    }

    fn ratio(&self, num: (usize, usize), den: (usize, usize)) -> f64 {
        self.w(num.0, num.1) / self.w(den.0, den.1)
    }

    /// `(N - S) / N`, or 1 in the limit.
    fn resampling_factor(&self) -> f64 {
        self.population().map_or(1.0, |n| (n as f64 - self.selection) / n as f64)
    }

    /// `S / N`, or 0 in the limit.
    fn selection_per_site(&self) -> f64 {
        self.population().map_or(0.0, |n| self.selection / n as f64)
    }

    /// Fraction `(N - occupied - n) / N` of `K`-active sites, or 1 in the limit.
    fn free_fraction(&self, occupied: usize, n: usize) -> f64 {
        self.population().map_or(1.0, |pop| (pop - occupied - n) as f64 / pop as f64)
    }
}

fn choose2(k: usize) -> f64 {
    (k * k.saturating_sub(1)) as f64 / 2.0
}
