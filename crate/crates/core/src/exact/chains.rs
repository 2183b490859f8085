use std::collections::{HashMap, VecDeque};

use super::generator::{expm_apply_left, GeneratorMatrix};
use crate::backward::{enumerate_transitions, feynman_kac_v, BpState};
use crate::error::{Error, Result};
use crate::params::{ModelParams, Site, Type};

pub const DEFAULT_TYPE_CAP: usize = 200_000;
pub const DEFAULT_BP_CAP: usize = 200_000;

/// Type configurations `eta in K^I` indexed by `sum_i eta_i d^i`.
pub fn decode_config(mut idx: usize, n: usize, d: usize) -> Vec<Type> {
    (0..n)
        .map(|_| {
            let u = idx % d;
            idx /= d;
            u
        })
        .collect()
}

pub fn encode_config(eta: &[Type], d: usize) -> usize {
    eta.iter().rev().fold(0, |acc, &u| acc * d + u)
}

/// The type process on `K^I` with its exact generator.
#[derive(Debug, Clone)]
pub struct TypeChain {
    pub n: usize,
    pub d: usize,
    pub gen: GeneratorMatrix,
}

impl TypeChain {
    /// Law at time `t` started from `mu`.
    pub fn law_at(&self, mu: &[f64], t: f64) -> Result<Vec<f64>> {
        expm_apply_left(&self.gen, mu, t)
    }

    pub fn len(&self) -> usize {
        self.gen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gen.is_empty()
    }
}

pub fn build_type_generator(p: &ModelParams) -> Result<TypeChain> {
    build_type_generator_capped(p, DEFAULT_TYPE_CAP)
}

pub fn build_type_generator_capped(p: &ModelParams, cap: usize) -> Result<TypeChain> {
    let size = (p.d as u128).checked_pow(p.n as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::ExactSolveInfeasible { states: usize::try_from(size).unwrap_or(usize::MAX), cap });
    }
    let size = size as usize;
    let (n, d) = (p.n, p.d);
    let pow: Vec<usize> = (0..n).map(|i| d.pow(i as u32)).collect();
    let mut triples = Vec::new();
    for idx in 0..size {
        let eta = decode_config(idx, n, d);
        for i in 0..n {
            for u in 0..d {
                if u != eta[i] {
                    let to = idx - eta[i] * pow[i] + u * pow[i];
                    triples.push((idx, to, p.mutation_rate * p.kernel(eta[i], u)));
                }
            }
            for j in 0..n {
                if i != j && eta[i] != eta[j] {
                    // i replaces j
                    let to = idx - eta[j] * pow[j] + eta[i] * pow[j];
                    triples.push((idx, to, p.resampling_rate(eta[i], eta[j])));
                }
            }
        }
    }
    Ok(TypeChain { n, d, gen: GeneratorMatrix::from_triples(size, triples) })
}

/// The backward process on the states reachable from a set of starts.
#[derive(Debug, Clone)]
pub struct BpChain {
    pub states: Vec<BpState>,
    pub index: HashMap<BpState, usize>,
    /// Generator without the Feynman-Kac term.
    pub gen: GeneratorMatrix,
    /// `V` on every state.
    pub v: Vec<f64>,
}

impl BpChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn position(&self, s: &BpState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Generator with `V` on the diagonal.
    pub fn fk_generator(&self) -> GeneratorMatrix {
        self.gen.clone().with_fk(self.v.clone())
    }

    /// `eta' -> sum_eta mu(eta) H*(eta, eta')` for a law `mu` on `K^I`.
    pub fn h_star_expectation(&self, mu: &[f64], d: usize) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| {
                mu.iter().enumerate().filter(|&(idx, &w)| w != 0.0 && s.h_star_index(idx, d)).map(|(_, &w)| w).sum()
            })
            .collect()
    }

    /// For each state, the configurations on which `H*` equals one.
    pub fn h_star_support(&self, n: usize, d: usize) -> Vec<Vec<usize>> {
        let size = d.pow(n as u32);
        self.states.iter().map(|s| (0..size).filter(|&idx| s.h_star_index(idx, d)).collect()).collect()
    }
}

pub fn build_bp_generator(p: &ModelParams, starts: &[BpState]) -> Result<BpChain> {
    build_bp_generator_capped(p, starts, DEFAULT_BP_CAP)
}

/// Breadth-first closure of the reachable states, with rates of all kinds
/// leading to the same target added up.
pub fn build_bp_generator_capped(p: &ModelParams, starts: &[BpState], cap: usize) -> Result<BpChain> {
    let mut states: Vec<BpState> = Vec::new();
    let mut index: HashMap<BpState, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for s in starts {
        if !index.contains_key(s) {
            index.insert(s.clone(), states.len());
            states.push(s.clone());
            queue.push_back(states.len() - 1);
        }
    }
    let mut triples = Vec::new();
    while let Some(k) = queue.pop_front() {
        for tr in enumerate_transitions(&states[k], p) {
            let target = match index.get(&tr.target) {
                Some(&t) => t,
                None => {
                    if states.len() >= cap {
                        return Err(Error::ExactSolveInfeasible { states: states.len() + 1, cap });
                    }
                    index.insert(tr.target.clone(), states.len());
                    states.push(tr.target);
                    queue.push_back(states.len() - 1);
                    states.len() - 1
                }
            };
            triples.push((k, target, tr.rate));
        }
    }
    let gen = GeneratorMatrix::from_triples(states.len(), triples);
    let v = states.iter().map(|s| feynman_kac_v(s, p)).collect();
    Ok(BpChain { states, index, gen, v })
}

/// All canonical starts with tagged sites `sites`, one per `xi in K^J`.
pub fn all_canonical_starts(p: &ModelParams, sites: &[Site]) -> Result<Vec<BpState>> {
    let count = p.d.pow(sites.len() as u32);
    (0..count).map(|idx| BpState::canonical_start_at(p, sites, &decode_config(idx, sites.len(), p.d))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backward::full_set;

    #[test]
    fn single_site_type_generator() {
        let p = ModelParams::new(
            1,
            3,
            2.0,
            vec![0.2, 0.5, 0.3, 0.1, 0.6, 0.3, 0.4, 0.4, 0.2],
            0.0,
            ModelParams::linear_chi(3),
        )
        .unwrap();
        let chain = build_type_generator(&p).unwrap();
        for u in 0..3 {
            for v in 0..3 {
                if u != v {
                    assert!((chain.gen.rate(u, v) - 2.0 * p.kernel(u, v)).abs() < 1e-15);
                }
            }
        }
        assert!(chain.gen.max_row_defect() < 1e-12);
    }

    #[test]
    fn two_site_rate_by_hand() {
        let p = ModelParams::new(2, 2, 1.3, vec![0.7, 0.3, 0.4, 0.6], 0.0, vec![0.0, 1.0]).unwrap();
        let chain = build_type_generator(&p).unwrap();
        // (0,1) -> (0,0): site 1 mutates 1 -> 0, or site 0 replaces site 1
        let from = encode_config(&[0, 1], 2);
        let to = encode_config(&[0, 0], 2);
        assert!((chain.gen.rate(from, to) - (1.3 * 0.4 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn type_cap() {
        let p = ModelParams::two_type(20, 1.0, 0.5, 0.0).unwrap();
        assert!(matches!(build_type_generator(&p), Err(Error::ExactSolveInfeasible { .. })));
    }

    #[test]
    fn neutral_single_tag_is_marked_walk() {
        let p = ModelParams::two_type(3, 1.0, 0.5, 0.0).unwrap();
        let chain = build_bp_generator(&p, &all_canonical_starts(&p, &[0]).unwrap()).unwrap();
        assert_eq!(chain.len(), 2 * 3);
        for s in &chain.states {
            assert!(s.active.iter().all(|&a| a == full_set(2)));
        }
        assert!(chain.gen.max_row_defect() < 1e-12);
    }

    #[test]
    fn rows_match_enumeration() {
        let p = ModelParams::two_type(2, 1.0, 0.4, 1.0).unwrap();
        let chain = build_bp_generator(&p, &all_canonical_starts(&p, &[0, 1]).unwrap()).unwrap();
        for (k, s) in chain.states.iter().enumerate() {
            let mut want: HashMap<usize, f64> = HashMap::new();
            for tr in enumerate_transitions(s, &p) {
                *want.entry(chain.index[&tr.target]).or_insert(0.0) += tr.rate;
            }
            assert_eq!(want.len(), chain.gen.rows[k].len());
            for &(j, r) in &chain.gen.rows[k] {
                assert!((want[&j] - r).abs() < 1e-15);
            }
        }
        // separated (never again after merging): 4 mark pairs; merged: 2 sites
        // x 2 marks x 2 subsets {K, {0}} on the free site
        assert_eq!(chain.len(), 12);
    }
}
