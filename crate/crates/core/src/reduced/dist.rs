use std::fmt::Write as _;

use super::{choose2, ReducedModel, N_MAX_CAP};
use crate::error::{Error, Result};
use crate::exact::{expm_apply, GeneratorMatrix};
use crate::params::ModelParams;

/// Type information of the two tagged lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pair {
    /// Both of type 0.
    Zeros,
    /// Both of type 1.
    Ones,
    /// One of each type.
    Mixed,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::Zeros, Pair::Ones, Pair::Mixed];

    pub fn from_types(u: usize, v: usize) -> Pair {
        match (u, v) {
            (0, 0) => Pair::Zeros,
            (1, 1) => Pair::Ones,
            _ => Pair::Mixed,
        }
    }

    /// One representative pair of types.
    pub fn types(self) -> [usize; 2] {
        match self {
            Pair::Zeros => [0, 0],
            Pair::Ones => [1, 1],
            Pair::Mixed => [0, 1],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pair::Zeros => "zeros",
            Pair::Ones => "ones",
            Pair::Mixed => "mixed",
        }
    }

    /// `(ones, zeros)` of the weight `W` normalizing level `n`.
    fn weight_index(self, n: usize) -> (usize, usize) {
        match self {
            Pair::Zeros => (0, n + 2),
            Pair::Ones => (2, n),
            Pair::Mixed => (1, n + 1),
        }
    }
}

/// A non-absorbed state of the distance chain.
pub type DistState = (Pair, usize);

/// The chain for the genealogical distance of two tagged sites. The
/// absorbing state (coalescence) is not stored; its rate is a killing rate.
#[derive(Debug, Clone)]
pub struct DistChainSpec {
    pub model: ReducedModel,
    /// Largest level `n`: `N - 2` in finite mode, the truncation otherwise.
    pub top: usize,
}

impl DistChainSpec {
    pub fn finite(p: &ModelParams) -> Result<Self> {
        if p.n < 2 {
            return Err(Error::InvalidParams("two tagged sites need N >= 2".into()));
        }
        Ok(DistChainSpec { model: ReducedModel::finite(p)?, top: p.n - 2 })
    }

    pub fn limit(p: &ModelParams, n_max: usize) -> Result<Self> {
        Ok(DistChainSpec { model: ReducedModel::limit(p, n_max + 3)?, top: n_max })
    }

    pub fn is_limit(&self) -> bool {
        self.model.population().is_none()
    }

    pub fn len(&self) -> usize {
        3 * (self.top + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, (y, n): DistState) -> usize {
        y as usize * (self.top + 1) + n
    }

    pub fn state(&self, k: usize) -> DistState {
        (Pair::ALL[k / (self.top + 1)], k % (self.top + 1))
    }

    /// `W` normalizing the state `(y, n)`; the weights of `pf_t(n)` are
    /// these with a factor 2 on the mixed pair.
    pub fn weight(&self, (y, n): DistState) -> f64 {
        let (a, b) = y.weight_index(n);
        self.model.w(a, b)
    }

    fn up_rate(&self, (y, n): DistState) -> f64 {
        if n >= self.top {
            return 0.0;
        }
        let m = &self.model;
        let (a, b) = y.weight_index(n);
        m.selection * (n + 2) as f64 * m.free_fraction(2, n) * m.ratio((a, b + 1), (a, b))
    }

    fn down_rate(&self, (y, n): DistState) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let m = &self.model;
        let pairs = match y {
            Pair::Zeros => choose2(n + 2) - 1.0,
            Pair::Ones => choose2(n),
            Pair::Mixed => choose2(n + 1),
        };
        let (a, b) = y.weight_index(n);
        (m.mutation_rate * m.b0 * n as f64 + pairs * m.resampling_factor()) * m.ratio((a, b - 1), (a, b))
    }

    /// Rates between the type pairs at level `n`.
    fn switch_rates(&self, (y, n): DistState) -> Vec<(Pair, f64)> {
        let m = &self.model;
        let (bb0, bb1) = (m.mutation_rate * m.b0, m.mutation_rate * m.b1);
        let from = y.weight_index(n);
        let mixed = Pair::Mixed.weight_index(n);
        match y {
            Pair::Zeros => vec![(Pair::Mixed, 2.0 * bb0 * m.ratio(mixed, from))],
            Pair::Ones => vec![(Pair::Mixed, 2.0 * bb1 * m.ratio(mixed, from))],
            Pair::Mixed => vec![
                (Pair::Zeros, bb1 * m.ratio(Pair::Zeros.weight_index(n), from)),
                (Pair::Ones, bb0 * m.ratio(Pair::Ones.weight_index(n), from)),
            ],
        }
    }

    /// Rate of coalescence of the two lines.
    pub fn absorption_rate(&self, (y, n): DistState) -> f64 {
        let m = &self.model;
        let from = y.weight_index(n);
        match y {
            Pair::Zeros => m.resampling_factor() * m.ratio((0, n + 1), from) + m.selection_per_site(),
            Pair::Ones => m.ratio((1, n), from) + m.selection_per_site() * m.ratio((1, n + 1), from),
            Pair::Mixed => 0.0,
        }
    }

    /// Transient rates as `(from, to, rate)`.
    pub fn rates(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            let (y, n) = self.state(k);
            let mut push = |to: DistState, r: f64| {
                if r > 0.0 {
                    out.push((k, self.index(to), r));
                }
            };
            push((y, n + 1), self.up_rate((y, n)));
            push((y, n.wrapping_sub(1)), self.down_rate((y, n)));
            for (z, r) in self.switch_rates((y, n)) {
                push((z, n), r);
            }
        }
        out
    }

    /// Sub-generator on the non-absorbed states; mass leaving is the
    /// coalescence.
    pub fn generator(&self) -> GeneratorMatrix {
        let mut g = GeneratorMatrix::from_triples(self.len(), self.rates());
        for k in 0..self.len() {
            g.exit[k] += self.absorption_rate(self.state(k));
        }
        g
    }
}

/// Survival probabilities `f_t(y, n)` on a time grid, with `pf_t(n)`.
#[derive(Debug, Clone)]
pub struct SurvivalTable {
    pub times: Vec<f64>,
    pub top: usize,
    /// `f[time index][state index]`, states ordered as in the spec.
    pub f: Vec<Vec<f64>>,
    /// `weights[state index]`, the `W` normalizing each state.
    pub weights: Vec<f64>,
    /// Largest change of `f(., 0)` when the truncation was last doubled
    /// (0 in finite mode or when not adaptive).
    pub truncation_change: f64,
}

impl SurvivalTable {
    fn idx(&self, y: Pair, n: usize) -> usize {
        y as usize * (self.top + 1) + n
    }

    pub fn get(&self, time_index: usize, y: Pair, n: usize) -> f64 {
        self.f[time_index][self.idx(y, n)]
    }

    /// `pf_t(n) = W(0^{n+2}) f(zeros, n) + W(1^2, 0^n) f(ones, n) + 2 W(1, 0^{n+1}) f(mixed, n)`.
    pub fn pf(&self, time_index: usize, n: usize) -> f64 {
        pf_of(&self.f[time_index], &self.weights, self.top, n)
    }

    /// CSV with header `t,pair,n,f`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,pair,n,f\n");
        for (ti, t) in self.times.iter().enumerate() {
            for y in Pair::ALL {
                for n in 0..=self.top {
                    writeln!(out, "{t},{},{n},{:.17e}", y.label(), self.get(ti, y, n)).unwrap();
                }
            }
        }
        out
    }

    /// CSV with header `t,n,pf` for levels `0..=max_n`.
    pub fn pf_csv(&self, max_n: usize) -> String {
        let mut out = String::from("t,n,pf\n");
        for (ti, t) in self.times.iter().enumerate() {
            for n in 0..=max_n.min(self.top) {
                writeln!(out, "{t},{n},{:.17e}", self.pf(ti, n)).unwrap();
            }
        }
        out
    }
}

fn pf_of(f: &[f64], weights: &[f64], top: usize, n: usize) -> f64 {
    let at = |y: Pair| y as usize * (top + 1) + n;
    weights[at(Pair::Zeros)] * f[at(Pair::Zeros)]
        + weights[at(Pair::Ones)] * f[at(Pair::Ones)]
        + 2.0 * weights[at(Pair::Mixed)] * f[at(Pair::Mixed)]
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::EmptyInput("time grid".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::OutOfRange("time grid must be nonnegative and strictly increasing".into()));
    }
    Ok(())
}

/// Solves the backward equation `d/dt f_t = L f_t`, `f_0 = 1`, on the
/// grid by propagating the sub-generator's semigroup between grid points.
pub fn dist_survival(spec: &DistChainSpec, times: &[f64]) -> Result<SurvivalTable> {
    check_grid(times)?;
    let g = spec.generator();
    let mut current = vec![1.0; spec.len()];
    let mut last = 0.0;
    let mut f = Vec::with_capacity(times.len());
    for &t in times {
        current = expm_apply(&g, &current, t - last)?;
        current.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        last = t;
        f.push(current.clone());
    }
    let weights = (0..spec.len()).map(|k| spec.weight(spec.state(k))).collect();
    Ok(SurvivalTable { times: times.to_vec(), top: spec.top, f, weights, truncation_change: 0.0 })
}

/// Tolerance on the change of `f(., 0)` when doubling the truncation.
pub const TRUNCATION_TOL: f64 = 1e-9;

/// Limit-mode survival with the truncation doubled from `start` until
/// `f(., 0)` changes by less than [`TRUNCATION_TOL`] on the whole grid.
pub fn dist_survival_adaptive(p: &ModelParams, times: &[f64], start: usize) -> Result<(DistChainSpec, SurvivalTable)> {
    let mut n_max = start.max(2);
    let mut spec = DistChainSpec::limit(p, n_max)?;
    let mut table = dist_survival(&spec, times)?;
    loop {
        if 2 * n_max > N_MAX_CAP {
            return Err(Error::TruncationBudget { n_max });
        }
        let next_spec = DistChainSpec::limit(p, 2 * n_max)?;
        let mut next = dist_survival(&next_spec, times)?;
        let change = (0..times.len())
            .flat_map(|ti| Pair::ALL.map(|y| (table.get(ti, y, 0) - next.get(ti, y, 0)).abs()))
            .fold(0.0f64, f64::max);
        next.truncation_change = change;
        n_max *= 2;
        spec = next_spec;
        table = next;
        if change < TRUNCATION_TOL {
            return Ok((spec, table));
        }
    }
}

/// Derivatives at `t = 0` obtained from powers of the generator applied to
/// the indicator of non-absorption.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorReport {
    /// `pf^{(k)}(0)` for `k = 0..=order`.
    pub pf: Vec<f64>,
    /// `d/dt f_t(y, 0)` at 0, in the order zeros, ones, mixed.
    pub df0: [f64; 3],
    /// `-(1 + 2 S^2 W(1, 0))`, the predicted third derivative.
    pub predicted_third: f64,
    /// `-W(0)/W(0^2)` and `-W(1)/W(1^2)`, the predicted first derivatives
    /// of `f(zeros, 0)` and `f(ones, 0)`.
    pub predicted_df0: [f64; 2],
}

impl TaylorReport {
    /// CSV with header `quantity,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value\n");
        for (k, v) in self.pf.iter().enumerate() {
            writeln!(out, "pf_d{k},{v:.17e}").unwrap();
        }
        for (y, v) in Pair::ALL.iter().zip(self.df0) {
            writeln!(out, "df0_{},{v:.17e}", y.label()).unwrap();
        }
        writeln!(out, "predicted_pf_d3,{:.17e}", self.predicted_third).unwrap();
        writeln!(out, "predicted_df0_zeros,{:.17e}", self.predicted_df0[0]).unwrap();
        writeln!(out, "predicted_df0_ones,{:.17e}", self.predicted_df0[1]).unwrap();
        out
    }
}

pub fn dist_taylor_coeffs(spec: &DistChainSpec, order: usize) -> Result<TaylorReport> {
    if spec.top < order {
        return Err(Error::TruncationBudget { n_max: spec.top });
    }
    let g = spec.generator();
    let weights: Vec<f64> = (0..spec.len()).map(|k| spec.weight(spec.state(k))).collect();
    let mut v = vec![1.0; spec.len()];
    let mut pf = vec![pf_of(&v, &weights, spec.top, 0)];
    let mut df0 = [0.0; 3];
    for k in 1..=order {
        v = g.apply(&v);
        pf.push(pf_of(&v, &weights, spec.top, 0));
        if k == 1 {
            df0 = Pair::ALL.map(|y| v[spec.index((y, 0))]);
        }
    }
    let m = &spec.model;
    let s = m.selection;
    Ok(TaylorReport {
        pf,
        df0,
        predicted_third: -(1.0 + 2.0 * s * s * m.w(1, 1)),
        predicted_df0: [-m.w(0, 1) / m.w(0, 2), -m.w(1, 0) / m.w(2, 0)],
    })
}

/// Maximum absolute residual of the three weighted backward equations for
/// `f_t(zeros, n)`, `f_t(ones, n)` and `f_t(mixed, n)`, `n <= max_n`, on
/// every grid time. The time derivative is the generator applied to
/// `f_t`. Limit mode only.
pub fn lemma_ode_residual(spec: &DistChainSpec, table: &SurvivalTable, max_n: usize) -> Result<f64> {
    let (g, m) = lemma_setup(spec, table, max_n)?;
    let (bb0, bb1, s, b) = (m.mutation_rate * m.b0, m.mutation_rate * m.b1, m.selection, m.mutation_rate);
    let e = |a: usize, z: usize| m.w(a, z);
    let mut worst = 0.0f64;
    for f in &table.f {
        let df = g.apply(f);
        let at = |y: Pair, n: usize| f[spec.index((y, n))];
        let below = |y: Pair, n: usize| if n == 0 { 0.0 } else { at(y, n - 1) };
        for n in 0..=max_n {
            let nf = n as f64;
            let diag = (2.0 + nf) * (nf + 1.0 + 2.0 * b + 2.0 * s) / 2.0;
            let zeros = (nf * bb0 + (nf + 2.0) * (nf + 1.0) / 2.0 - 1.0) * e(0, n + 1) * below(Pair::Zeros, n)
                + 2.0 * bb0 * e(1, n + 1) * at(Pair::Mixed, n)
                + (2.0 + nf) * s * e(0, n + 3) * at(Pair::Zeros, n + 1)
                - (diag - 2.0 * b + 2.0 * bb1) * e(0, n + 2) * at(Pair::Zeros, n);
            let ones =
                (nf * bb0 + nf * (nf - 1.0) / 2.0) * (if n == 0 { 0.0 } else { e(2, n - 1) }) * below(Pair::Ones, n)
                    + 2.0 * bb1 * e(1, n + 1) * at(Pair::Mixed, n)
                    + (nf + 2.0) * s * e(2, n + 1) * at(Pair::Ones, n + 1)
                    - (diag - 2.0 * s - 2.0 * b + 2.0 * bb0) * e(2, n) * at(Pair::Ones, n);
            let mixed = (nf * bb0 + nf * (nf + 1.0) / 2.0) * e(1, n) * below(Pair::Mixed, n)
                + bb1 * e(0, n + 2) * at(Pair::Zeros, n)
                + bb0 * e(2, n) * at(Pair::Ones, n)
                + (nf + 2.0) * s * e(1, n + 2) * at(Pair::Mixed, n + 1)
                - (diag - s - b) * e(1, n + 1) * at(Pair::Mixed, n);
            let lhs = [
                e(0, n + 2) * df[spec.index((Pair::Zeros, n))],
                e(2, n) * df[spec.index((Pair::Ones, n))],
                e(1, n + 1) * df[spec.index((Pair::Mixed, n))],
            ];
            for (l, r) in lhs.iter().zip([zeros, ones, mixed]) {
                worst = worst.max((l - r).abs());
            }
        }
    }
    Ok(worst)
}

/// Maximum absolute residual of the recursion
/// `d/dt pf_t(n) = n/2 (n - 1 + 2 B b0) pf_t(n-1) - ((n+2)/2 (n+1+2B+2S) - 2B) pf_t(n) + (n+2) S pf_t(n+1) + R_t(n)`.
pub fn pf_recursion_residual(spec: &DistChainSpec, table: &SurvivalTable, max_n: usize) -> Result<f64> {
    let (g, m) = lemma_setup(spec, table, max_n)?;
    let (bb0, s, b) = (m.mutation_rate * m.b0, m.selection, m.mutation_rate);
    let e = |a: usize, z: usize| m.w(a, z);
    let mut worst = 0.0f64;
    for f in &table.f {
        let df = g.apply(f);
        let at = |y: Pair, n: usize| f[spec.index((y, n))];
        for n in 0..=max_n {
            let nf = n as f64;
            let pf = |k: usize| pf_of(f, &table.weights, spec.top, k);
            let lhs = pf_of(&df, &table.weights, spec.top, n);
            let (below, remainder_below) = if n == 0 {
                (0.0, 0.0)
            } else {
                (
                    pf(n - 1),
                    2.0 * nf * e(0, n + 1) * at(Pair::Zeros, n - 1) + 2.0 * nf * e(1, n) * at(Pair::Mixed, n - 1),
                )
            };
            let remainder =
                remainder_below + 2.0 * s * e(2, n) * at(Pair::Ones, n) + 2.0 * s * e(1, n + 1) * at(Pair::Mixed, n);
            let rhs = nf / 2.0 * (nf - 1.0 + 2.0 * bb0) * below
                - ((nf + 2.0) / 2.0 * (nf + 1.0 + 2.0 * b + 2.0 * s) - 2.0 * b) * pf(n)
                + (nf + 2.0) * s * pf(n + 1)
                + remainder;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

fn lemma_setup<'a>(
    spec: &'a DistChainSpec,
    table: &SurvivalTable,
    max_n: usize,
) -> Result<(GeneratorMatrix, &'a ReducedModel)> {
    if !spec.is_limit() {
        return Err(Error::InvalidParams("the Lemma equations hold for the limit chain".into()));
    }
    if max_n + 1 > spec.top || table.top != spec.top {
        return Err(Error::TruncationBudget { n_max: spec.top });
    }
    Ok((spec.generator(), &spec.model))
}
