//! Stationary law of the finite-`N` type-frequency chain and sampling
//! probabilities `P_N(1^n, 0^m)` derived from it.
//!
//! The type configuration of the Moran model is exchangeable in
//! equilibrium, so the law is stored over count vectors `(c_0, .., c_{d-1})`
//! with `sum c_u = N`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::gth_stationary;
use crate::params::{ModelParams, Type};

/// Default cap on the number of count vectors for the exact solve.
pub const DEFAULT_STATE_CAP: usize = 100_000;
/// Largest chain solved by dense elimination; larger chains use Gauss-Seidel.
const DENSE_LIMIT: usize = 1_500;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryTypeLaw {
    pub n: usize,
    pub d: usize,
    /// Count vectors, one per state.
    pub counts: Vec<Vec<usize>>,
    /// Probability of each count vector.
    pub weights: Vec<f64>,
}

impl StationaryTypeLaw {
    /// Weight of `k` type-1 individuals (two types only).
    pub fn two_type_weight(&self, k: usize) -> f64 {
        debug_assert_eq!(self.d, 2);
        self.weights[k]
    }

    /// Probability that the first `types.len()` sites carry exactly `types`.
    pub fn sample_probability(&self, types: &[Type]) -> Result<f64> {
        if types.len() > self.n {
            return Err(Error::SampleTooLarge { requested: types.len(), population: self.n });
        }
        let mut wanted = vec![0usize; self.d];
        for &t in types {
            wanted[t] += 1;
        }
        Ok(self.counts.iter().zip(&self.weights).map(|(c, &w)| w * sampling_fraction(c, &wanted, self.n)).sum())
    }

    /// Probability of one full configuration in `K^I`.
    pub fn configuration_probability(&self, config: &[Type]) -> f64 {
        let mut c = vec![0usize; self.d];
        for &t in config {
            c[t] += 1;
        }
        let idx = self.counts.iter().position(|x| *x == c).expect("count vector enumerated");
        self.weights[idx] / multinomial(&c)
    }

    /// The law expanded to all `d^N` configurations, indexed by
    /// `sum_i type_i d^i`.
    pub fn configuration_law(&self) -> Vec<f64> {
        let lookup: HashMap<&[usize], f64> =
            self.counts.iter().zip(&self.weights).map(|(c, &w)| (c.as_slice(), w / multinomial(c))).collect();
        let total = self.d.pow(self.n as u32);
        (0..total)
            .map(|idx| {
                let mut c = vec![0usize; self.d];
                let mut x = idx;
                for _ in 0..self.n {
                    c[x % self.d] += 1;
                    x /= self.d;
                }
                lookup[c.as_slice()]
            })
            .collect()
    }
}

/// `prod_u (c_u)_{a_u} / (N)_{|a|}` written as a product of factors in
/// `[0, 1]`, which avoids overflow for any `N`.
fn sampling_fraction(counts: &[usize], wanted: &[usize], n: usize) -> f64 {
    let mut f = 1.0;
    let mut drawn = 0usize;
    for (&c, &a) in counts.iter().zip(wanted) {
        if a > c {
            return 0.0;
        }
        for r in 0..a {
            f *= (c - r) as f64 / (n - drawn) as f64;
            drawn += 1;
        }
    }
    f
}

fn multinomial(c: &[usize]) -> f64 {
    let n: usize = c.iter().sum();
    let mut lg = ln_factorial(n);
    for &x in c {
        lg -= ln_factorial(x);
    }
    lg.exp().round().max(1.0)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// All count vectors of length `d` summing to `n`, in lexicographic order.
pub fn count_vectors(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(rest);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=rest {
            cur.push(x);
            rec(rest - x, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::with_capacity(d), &mut out);
    out
}

fn count_vector_total(n: usize, d: usize) -> Option<usize> {
    // C(n + d - 1, d - 1) with overflow detection
    let mut acc: u128 = 1;
    for k in 1..d as u128 {
        acc = acc.checked_mul(n as u128 + k)? / k;
    }
    usize::try_from(acc).ok()
}

/// Off-diagonal rates of the count-vector chain: `(from, to, rate)`.
pub fn count_chain_rates(p: &ModelParams, states: &[Vec<usize>]) -> Vec<(usize, usize, f64)> {
    let index: HashMap<&[usize], usize> = states.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    let mut out = Vec::new();
    for (from, c) in states.iter().enumerate() {
        for v in 0..p.d {
            if c[v] == 0 {
                continue;
            }
            for u in 0..p.d {
                if u == v {
                    continue;
                }
                // a type-v site becomes type u, by mutation or by a type-u parent
                let rate =
                    c[v] as f64 * p.mutation_rate * p.kernel(v, u) + (c[u] * c[v]) as f64 * p.resampling_rate(u, v);
                if rate > 0.0 {
                    let mut t = c.clone();
                    t[v] -= 1;
                    t[u] += 1;
                    out.push((from, index[t.as_slice()], rate));
                }
            }
        }
    }
    out
}

/// Stationary law of the type-count chain, with the default state cap.
pub fn finite_stationary_law(p: &ModelParams) -> Result<StationaryTypeLaw> {
    finite_stationary_law_capped(p, DEFAULT_STATE_CAP)
}

pub fn finite_stationary_law_capped(p: &ModelParams, cap: usize) -> Result<StationaryTypeLaw> {
    if !(p.mutation_rate > 0.0) {
        return Err(Error::NoUniqueStationaryLaw("mutation rate B = 0".into()));
    }
    if !p.kernel_irreducible() {
        return Err(Error::NoUniqueStationaryLaw("mutation kernel is reducible".into()));
    }
    if p.d == 2 {
        return Ok(birth_death_law(p));
    }
    let total = count_vector_total(p.n, p.d).unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::ExactSolveInfeasible { states: total, cap });
    }
    let counts = count_vectors(p.n, p.d);
    let rates = count_chain_rates(p, &counts);
    let weights = if counts.len() <= DENSE_LIMIT {
        let mut dense = vec![vec![0.0; counts.len()]; counts.len()];
        for &(i, j, r) in &rates {
            dense[i][j] += r;
        }
        gth_stationary(dense)?
    } else {
        gauss_seidel_stationary(counts.len(), &rates)?
    };
    Ok(StationaryTypeLaw { n: p.n, d: p.d, counts, weights })
}

/// Product-form solution of the birth-death chain on the number `k` of
/// type-1 sites, accumulated in log scale.
fn birth_death_law(p: &ModelParams) -> StationaryTypeLaw {
    let n = p.n;
    let up =
        |k: usize| (n - k) as f64 * p.mutation_rate * p.kernel(0, 1) + (k * (n - k)) as f64 * p.resampling_rate(1, 0);
    let down = |k: usize| k as f64 * p.mutation_rate * p.kernel(1, 0) + (k * (n - k)) as f64 * p.resampling_rate(0, 1);
    let mut log_w = vec![0.0f64; n + 1];
    for k in 1..=n {
        log_w[k] = log_w[k - 1] + up(k - 1).ln() - down(k).ln();
    }
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let counts = (0..=n).map(|k| vec![n - k, k]).collect();
    StationaryTypeLaw { n, d: 2, counts, weights }
}

fn gauss_seidel_stationary(size: usize, rates: &[(usize, usize, f64)]) -> Result<Vec<f64>> {
    let mut outflow = vec![0.0; size];
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); size];
    for &(i, j, r) in rates {
        outflow[i] += r;
        incoming[j].push((i, r));
    }
    let mut pi = vec![1.0 / size as f64; size];
    for _ in 0..100_000 {
        let mut delta: f64 = 0.0;
        for j in 0..size {
            let inflow: f64 = incoming[j].iter().map(|&(i, r)| pi[i] * r).sum();
            let new = inflow / outflow[j];
            delta = delta.max((new - pi[j]).abs());
            pi[j] = new;
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= total);
        if delta < 1e-15 {
            return Ok(pi);
        }
    }
    Err(Error::NoUniqueStationaryLaw("Gauss-Seidel did not converge".into()))
}

/// `P_N(1^n, 0^m)`: probability that `n` given sites carry type 1 and `m`
/// other given sites carry type 0.
pub fn pn_probability(law: &StationaryTypeLaw, n: usize, m: usize) -> Result<f64> {
    if n + m > law.n {
        return Err(Error::SampleTooLarge { requested: n + m, population: law.n });
    }
    if law.d != 2 {
        return Err(Error::InvalidParams("P_N(1^n, 0^m) is defined for two types".into()));
    }
    Ok(law.counts.iter().zip(&law.weights).map(|(c, &w)| w * sampling_fraction(c, &[m, n], law.n)).sum())
}
