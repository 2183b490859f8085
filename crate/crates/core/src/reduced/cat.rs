use std::fmt::Write as _;

use super::{choose2, ReducedModel};
use crate::error::{Error, Result};
use crate::exact::GeneratorMatrix;
use crate::linalg::gth_stationary;
use crate::params::{ModelParams, Type};

/// `(mark of the single line, number of {0}-active sites)`.
pub type CatState = (Type, usize);

/// The chain for the common ancestor type.
#[derive(Debug, Clone)]
pub struct CatChainSpec {
    pub model: ReducedModel,
    /// Largest level `n`: `N - 1` in finite mode, the truncation otherwise.
    pub top: usize,
    /// Drops the factor `n + 1` from the upward rate, as in the original
    /// definition of the common ancestor process. For comparison only.
    pub fearnhead_variant: bool,
}

impl CatChainSpec {
    pub fn finite(p: &ModelParams) -> Result<Self> {
        Ok(CatChainSpec { model: ReducedModel::finite(p)?, top: p.n - 1, fearnhead_variant: false })
    }

    pub fn limit(p: &ModelParams, n_max: usize) -> Result<Self> {
        Ok(CatChainSpec { model: ReducedModel::limit(p, n_max + 2)?, top: n_max, fearnhead_variant: false })
    }

    pub fn len(&self) -> usize {
        2 * (self.top + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, (u, n): CatState) -> usize {
        u * (self.top + 1) + n
    }

    pub fn state(&self, k: usize) -> CatState {
        (k / (self.top + 1), k % (self.top + 1))
    }

    /// Rate of `(u, n) -> (u, n + 1)`.
    pub fn up_rate(&self, (u, n): CatState) -> f64 {
        if n >= self.top {
            return 0.0;
        }
        let m = &self.model;

        let factor = if self.fearnhead_variant { 1.0 } else { (n + 1) as f64 };
        m.selection * factor * m.free_fraction(1, n) * m.ratio((u, n + 2 - u), (u, n + 1 - u))
    }

    /// Rate of `(u, n) -> (u, n - 1)`.
    pub fn down_rate(&self, (u, n): CatState) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let m = &self.model;

        (m.mutation_rate * m.b0 * n as f64 + choose2(n + 1 - u) * m.resampling_factor())
            * m.ratio((u, n - u), (u, n + 1 - u))
    }

    /// Rate of `(u, n) -> (1 - u, n)`.
    pub fn switch_rate(&self, (u, n): CatState) -> f64 {
        let m = &self.model;
        let to = if u == 1 { m.b1 } else { m.b0 };

        m.mutation_rate * to * m.ratio((1 - u, n + u), (u, n + 1 - u))
    }

    /// All positive rates as `(from, to, rate)`.
    pub fn rates(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            let (u, n) = self.state(k);
            let moves = [
                ((u, n + 1), self.up_rate((u, n))),
                ((u, n.wrapping_sub(1)), self.down_rate((u, n))),
                ((1 - u, n), self.switch_rate((u, n))),
            ];
            for (to, r) in moves {
                if r > 0.0 {
                    out.push((k, self.index(to), r));
                }
            }
        }
        out
    }

    pub fn generator(&self) -> GeneratorMatrix {
        GeneratorMatrix::from_triples(self.len(), self.rates())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatEquilibrium {
    pub states: Vec<CatState>,
    pub probabilities: Vec<f64>,
    /// Stationary type law of the common ancestor type.
    pub marginal: [f64; 2],
    /// Mass on the top level (the truncation in limit mode).
    pub tail: f64,
}

impl CatEquilibrium {
    /// CSV with header `u,n,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,n,probability\n");
        for (&(u, n), p) in self.states.iter().zip(&self.probabilities) {
            writeln!(out, "{u},{n},{p:.17e}").unwrap();
        }
        out
    }
}

/// Tail mass allowed on the truncation level in limit mode.
pub const CAT_TAIL_BUDGET: f64 = 1e-10;

/// Equilibrium of the chain. In limit mode the mass on the truncation
/// level must stay below [`CAT_TAIL_BUDGET`].
pub fn cat_equilibrium(spec: &CatChainSpec) -> Result<CatEquilibrium> {
    let size = spec.len();
    let mut dense = vec![vec![0.0; size]; size];
    for (i, j, r) in spec.rates() {
        dense[i][j] += r;
    }
    let probabilities = gth_stationary(dense)?;
    let states: Vec<CatState> = (0..size).map(|k| spec.state(k)).collect();
    let mut marginal = [0.0; 2];
    let mut tail = 0.0;
    for (&(u, n), p) in states.iter().zip(&probabilities) {
        marginal[u] += p;
        if n == spec.top {
            tail += p;
        }
    }
    if spec.model.population().is_none() && spec.top > 0 && tail >= CAT_TAIL_BUDGET {
        return Err(Error::TruncationBudget { n_max: spec.top });
    }
    Ok(CatEquilibrium { states, probabilities, marginal, tail })
}

impl CatChainSpec {
    /// Limit chain with the truncation doubled from `start` until the
    /// tail budget holds.
    pub fn limit_adaptive(p: &ModelParams, start: usize) -> Result<(Self, CatEquilibrium)> {
        let mut n_max = start.max(1);
        loop {
            let spec = Self::limit(p, n_max)?;
            match cat_equilibrium(&spec) {
                Ok(eq) => return Ok((spec, eq)),
                Err(Error::TruncationBudget { .. }) if 2 * n_max <= super::N_MAX_CAP => n_max *= 2,
                Err(e) => return Err(e),
            }
        }
    }
}
