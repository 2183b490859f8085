//! Mixed moments `E[1^n, 0^m] = int z^n (1-z)^m pi(dz)` of the stationary
//! two-type Wright-Fisher diffusion with generator
//! `(B b1 (1-z) - B b0 z + S z (1-z)) d/dz + z (1-z)/2 d^2/dz^2`.
//!
//! The stationary density is `z^(2 B b1 - 1) (1-z)^(2 B b0 - 1) e^(2 S z)`
//! up to normalization. Integrals are evaluated with double-exponential
//! (tanh-sinh) quadrature in log space, which resolves the integrable
//! boundary singularities to near machine precision.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Truncation threshold: nodes whose log-term is this far below the running
/// maximum of the same integral are dropped.
const LOG_CUTOFF: f64 = 46.0;
const MAX_LEVEL: u32 = 12;
const REL_TOL: f64 = 2e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct MixedMomentTable {
    pub max_order: usize,
    /// Largest `n` stored; equals `max_order` for a full table.
    pub max_n: usize,
    /// `rows[n][m] = E[1^n, 0^m]` for `m <= max_order - n`.
    rows: Vec<Vec<f64>>,
}

impl MixedMomentTable {
    pub fn get(&self, n: usize, m: usize) -> Option<f64> {
        self.rows.get(n).and_then(|r| r.get(m)).copied()
    }

    /// `E[1^n, 0^m]`. Panics outside the computed range.
    pub fn e(&self, n: usize, m: usize) -> f64 {
        self.get(n, m).unwrap_or_else(|| {
            panic!("moment E[1^{n}, 0^{m}] outside table (order {}, n <= {})", self.max_order, self.max_n)
        })
    }

    /// CSV with header `n,m,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m,value\n");
        for (n, row) in self.rows.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                writeln!(out, "{n},{m},{v:.17e}").unwrap();
            }
        }
        out
    }
}

/// All moments with `n + m <= max_order`.
pub fn wf_mixed_moments(p: &ModelParams, max_order: usize) -> Result<MixedMomentTable> {
    wf_moment_strip(p, max_order, max_order)
}

/// Moments with `n + m <= max_order` and `n <= max_n`. The reduced chains
/// only need `n <= 2`, which keeps large orders cheap.
pub fn wf_moment_strip(p: &ModelParams, max_order: usize, max_n: usize) -> Result<MixedMomentTable> {
    if max_order < 1 {
        return Err(Error::MomentDomain("max order must be at least 1".into()));
    }
    let (b0, b1) = p.parent_independent_two_type()?;
    let (alpha, beta) = (2.0 * p.mutation_rate * b1, 2.0 * p.mutation_rate * b0);
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::MomentDomain("B b0 and B b1 must be positive for a normalizable density".into()));
    }
    let max_n = max_n.min(max_order);
    let mut exps = Vec::new();
    for n in 0..=max_n {
        for m in 0..=max_order - n {
            exps.push((n as f64, m as f64));
        }
    }
    let log_int = log_integrals(alpha, beta, p.selection, &exps);
    let norm = log_int[0];
    let mut rows = Vec::with_capacity(max_n + 1);
    let mut k = 0;
    for n in 0..=max_n {
        let row: Vec<f64> = (0..=max_order - n)
            .map(|_| {
                let v = (log_int[k] - norm).exp();
                k += 1;
                v
            })
            .collect();
        rows.push(row);
    }
    rows[0][0] = 1.0;
    Ok(MixedMomentTable { max_order, max_n, rows })
}

/// Running log-sum-exp accumulator.
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    acc: f64,
}

impl Lse {
    const EMPTY: Lse = Lse { max: f64::NEG_INFINITY, acc: 0.0 };

    fn push(&mut self, x: f64) {
        if x > self.max {
            self.acc = self.acc * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.acc += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        self.max + self.acc.ln()
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln int_0^1 z^(alpha+n-1) (1-z)^(beta+m-1) e^(2S(z-1)) dz` for every `(n, m)`.
fn log_integrals(alpha: f64, beta: f64, s: f64, exps: &[(f64, f64)]) -> Vec<f64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    // log of the integrand times the Jacobian at abscissa t; z = 1/(1+e^{-pi sinh t})
    let node = |t: f64, out: &mut Vec<f64>| {
        let u = 2.0 * half_pi * t.sinh();
        let ln_z = -softplus(-u);
        let ln_1mz = -softplus(u);
        let z_minus_1 = -(ln_1mz.exp());
        let base = (2.0 * half_pi * t.cosh()).ln() + alpha * ln_z + beta * ln_1mz + 2.0 * s * z_minus_1;
        out.clear();
        out.extend(exps.iter().map(|&(n, m)| base + n * ln_z + m * ln_1mz));
    };

    let mut sums = vec![Lse::EMPTY; exps.len()];
    let mut terms = Vec::with_capacity(exps.len());
    let mut previous: Option<Vec<f64>> = None;
    for level in 0..=MAX_LEVEL {
        let h = 0.5f64.powi(level as i32);
        let (start, stride) = if level == 0 { (0i64, 1i64) } else { (1, 2) };
        if level == 0 {
            node(0.0, &mut terms);
            sums.iter_mut().zip(&terms).for_each(|(acc, &x)| acc.push(x));
        }
        for sign in [1.0, -1.0] {
            let mut k = if level == 0 { 1 } else { start };
            loop {
                let t = sign * k as f64 * h;
                node(t, &mut terms);
                let mut negligible = true;
                for (acc, &x) in sums.iter_mut().zip(&terms) {
                    acc.push(x);
                    if x > acc.max - LOG_CUTOFF {
                        negligible = false;
                    }
                }
                if (negligible && t.abs() > 3.0) || t.abs() > 20.0 {
                    break;
                }
                k += stride;
            }
        }
        let estimate: Vec<f64> = sums.iter().map(|a| a.value() + h.ln()).collect();
        if let Some(prev) = &previous {
            let worst = estimate.iter().zip(prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if level >= 4 && worst < REL_TOL {
                return estimate;
            }
        }
        previous = Some(estimate);
    }
    previous.expect("at least one level")
}
