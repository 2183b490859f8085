//! Model parameters of the Moran model with selection and type-dependent
//! mutation.
//!
//! Types are `0..d`, life-sites are `0..N`. Resampling `i -> j` (the
//! individual on `i` replaces the one on `j`) happens at rate
//! `1/2 + S/(2N) [chi(type_i) - chi(type_j)]`, mutation of a site of type
//! `v` to `u` at rate `B b(v, u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A type label in `K = {0, .., d-1}`.
pub type Type = usize;
/// A life-site label in `I = {0, .., N-1}`.
pub type Site = usize;

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Population size `N`.
    #[serde(rename = "N")]
    pub n: usize,
    /// Number of types `d`.
    pub d: usize,
    /// Mutation rate `B`.
    #[serde(rename = "B")]
    pub mutation_rate: f64,
    /// Mutation kernel `b`, row-major `d x d`.
    pub b: Vec<f64>,
    /// Selection coefficient `S`.
    #[serde(rename = "S")]
    pub selection: f64,
    /// Fitness levels `chi`.
    pub chi: Vec<f64>,
}

impl ModelParams {
    /// Builds and validates a parameter set.
    pub fn new(n: usize, d: usize, mutation_rate: f64, b: Vec<f64>, selection: f64, chi: Vec<f64>) -> Result<Self> {
        validate_params(ModelParams { n, d, mutation_rate, b, selection, chi })
    }

    /// Two-type parameters with parent-independent mutation: `b(., 0) = b0`,
    /// `b(., 1) = b1 = 1 - b0`.
    pub fn two_type(n: usize, mutation_rate: f64, b0: f64, selection: f64) -> Result<Self> {
        let b1 = 1.0 - b0;
        Self::new(n, 2, mutation_rate, vec![b0, b1, b0, b1], selection, vec![0.0, 1.0])
    }

    /// Equally spaced fitness levels `chi(u) = u / (d - 1)`.
    pub fn linear_chi(d: usize) -> Vec<f64> {
        (0..d).map(|u| u as f64 / (d - 1) as f64).collect()
    }

    #[inline]
    pub fn kernel(&self, from: Type, to: Type) -> f64 {
        self.b[from * self.d + to]
    }

    /// Rate of the resampling event in which a type-`parent` individual
    /// replaces a type-`dying` individual.
    #[inline]
    pub fn resampling_rate(&self, parent: Type, dying: Type) -> f64 {
        0.5 + self.selection / (2.0 * self.n as f64) * (self.chi[parent] - self.chi[dying])
    }

    /// `S / 2N`.
    #[inline]
    pub fn sel_unit(&self) -> f64 {
        self.selection / (2.0 * self.n as f64)
    }

    /// Column sum `sum_u b(u, v)`.
    pub fn column_sum(&self, v: Type) -> f64 {
        (0..self.d).map(|u| self.kernel(u, v)).sum()
    }

    /// Mutation probabilities towards type 0 and type 1 in the two-type case,
    /// requiring identical rows of `b`.
    pub fn parent_independent_two_type(&self) -> Result<(f64, f64)> {
        if self.d != 2 {
            return Err(Error::InvalidParams(format!("two types required, got d = {}", self.d)));
        }
        let (b0, b1) = (self.kernel(0, 0), self.kernel(0, 1));
        if (self.kernel(1, 0) - b0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidParams("mutation kernel rows must coincide (b(0,0) = b(1,0))".into()));
        }
        Ok((b0, b1))
    }

    /// Whether the mutation kernel is irreducible (every type reachable
    /// from every other through positive entries).
    pub fn kernel_irreducible(&self) -> bool {
        let d = self.d;
        (0..d).all(|start| {
            let mut seen = vec![false; d];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for u in 0..d {
                    if !seen[u] && self.kernel(v, u) > 0.0 {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            seen.iter().all(|&s| s)
        })
    }
}

/// Checks every parameter invariant and returns the parameters unchanged.
pub fn validate_params(p: ModelParams) -> Result<ModelParams> {
    if p.n == 0 {
        return Err(Error::InvalidParams("population size must be positive".into()));
    }
    if p.d < 2 {
        return Err(Error::InvalidParams(format!("need at least two types, got d = {}", p.d)));
    }
    if p.b.len() != p.d * p.d {
        return Err(Error::LengthMismatch { expected: p.d * p.d, got: p.b.len() });
    }
    if p.chi.len() != p.d {
        return Err(Error::LengthMismatch { expected: p.d, got: p.chi.len() });
    }
    if !(p.mutation_rate >= 0.0) || !p.mutation_rate.is_finite() {
        return Err(Error::InvalidParams(format!("mutation rate {} must be >= 0", p.mutation_rate)));
    }
    for row in 0..p.d {
        let entries = &p.b[row * p.d..(row + 1) * p.d];
        if entries.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParams(format!("row {row} has a negative entry")));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::RowNotStochastic { row, sum });
        }
    }
    if p.chi[0] != 0.0 || p.chi[p.d - 1] != 1.0 || p.chi.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::FitnessNotIncreasing);
    }
    if !(p.selection >= 0.0 && p.selection <= p.n as f64) {
        return Err(Error::SelectionOutOfRange { s: p.selection, n: p.n });
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_neutral_accepted() {
        let p = ModelParams::new(3, 2, 1.0, vec![0.5, 0.5, 0.5, 0.5], 0.0, vec![0.0, 1.0]).unwrap();
        assert_eq!(p.n, 3);
    }

    #[test]
    fn row_not_stochastic() {
        let err = ModelParams::new(3, 2, 1.0, vec![0.5, 0.4, 0.5, 0.5], 0.0, vec![0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::RowNotStochastic { row: 0, .. }));
        assert!(err.to_string().contains("not stochastic"));
    }

    #[test]
    fn selection_out_of_range() {
        let err = ModelParams::new(3, 2, 1.0, vec![0.5; 4], 4.0, vec![0.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("selection out of range"));
    }

    #[test]
    fn chi_must_increase() {
        let err = ModelParams::new(3, 3, 1.0, vec![1.0 / 3.0; 9], 0.0, vec![0.0, 0.0, 1.0]);
        assert_eq!(err.unwrap_err(), Error::FitnessNotIncreasing);
    }

    #[test]
    fn resampling_rates_nonnegative_at_extreme_selection() {
        let p = ModelParams::two_type(4, 1.0, 0.5, 4.0).unwrap();
        assert_eq!(p.resampling_rate(1, 0), 1.0);
        assert_eq!(p.resampling_rate(0, 1), 0.0);
        assert_eq!(p.resampling_rate(1, 1), 0.5);
    }
}
