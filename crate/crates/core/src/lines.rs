//! Piecewise-constant right-continuous paths, used for extended ancestral
//! lines `s -> (type, site)` and for the time reversal that turns backward
//! process trajectories into ancestral lines.

use crate::params::{Site, Type};

/// A cadlag step path on `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath<V> {
    pub start: f64,
    pub end: f64,
    pub initial: V,
    /// Jump times in `(start, end]`, strictly increasing, with the value
    /// taken from the jump time on.
    pub jumps: Vec<(f64, V)>,
}

/// An extended ancestral line: the ancestor's type and life-site at each Time.
pub type AncestralLine = CadlagPath<(Type, Site)>;

impl<V: Clone + PartialEq> CadlagPath<V> {
    pub fn constant(start: f64, end: f64, value: V) -> Self {
        CadlagPath { start, end, initial: value, jumps: Vec::new() }
    }

    /// Appends a jump; a jump to the current value is dropped.
    pub fn push(&mut self, time: f64, value: V) {
        debug_assert!(time >= self.start && time <= self.end);
        debug_assert!(self.jumps.last().is_none_or(|(t, _)| time >= *t));
        if *self.final_value() == value {
            return;
        }
        match self.jumps.last_mut() {
            Some((t, v)) if *t == time => *v = value,
            _ => self.jumps.push((time, value)),
        }
    }

    pub fn final_value(&self) -> &V {
        self.jumps.last().map_or(&self.initial, |(_, v)| v)
    }

    /// Value at `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> &V {
        let k = self.jumps.partition_point(|(s, _)| *s <= t);
        if k == 0 {
            &self.initial
        } else {
            &self.jumps[k - 1].1
        }
    }

    /// Left limit at `t`.
    pub fn left_limit(&self, t: f64) -> &V {
        let k = self.jumps.partition_point(|(s, _)| *s < t);
        if k == 0 {
            &self.initial
        } else {
            &self.jumps[k - 1].1
        }
    }

    /// The path `x -> path((-x)-)` on `[-end, -start]`, made right-continuous
    /// again. Applying it twice gives back the original path.
    pub fn reflect(&self) -> Self {
        let mut out = CadlagPath::constant(-self.end, -self.start, self.final_value().clone());
        for k in (0..self.jumps.len()).rev() {
            let before = if k == 0 { &self.initial } else { &self.jumps[k - 1].1 };
            out.jumps.push((-self.jumps[k].0, before.clone()));
        }
        out
    }

    /// `int_from^to f(path(s)) ds`.
    pub fn integral(&self, from: f64, to: f64, f: impl Fn(&V) -> f64) -> f64 {
        if to <= from {
            return 0.0;
        }
        let mut total = 0.0;
        let mut cursor = from;
        let mut value = self.value_at(from);
        for (t, v) in &self.jumps {
            if *t <= from {
                continue;
            }
            if *t >= to {
                break;
            }
            total += (t - cursor) * f(value);
            cursor = *t;
            value = v;
        }
        total + (to - cursor) * f(value)
    }

    /// Time-shifted copy.
    pub fn shifted(&self, by: f64) -> Self {
        CadlagPath {
            start: self.start + by,
            end: self.end + by,
            initial: self.initial.clone(),
            jumps: self.jumps.iter().map(|(t, v)| (t + by, v.clone())).collect(),
        }
    }
}

/// Turns a backward trajectory on `[0, T]` into a forward line on `[-T, 0]`:
/// a jump at backward time `s` becomes a jump at Time `-s`, and the value
/// at the jump itself is the backward left limit.
pub fn backward_to_forward<V: Clone + PartialEq>(trajectory: &CadlagPath<V>) -> CadlagPath<V> {
    trajectory.reflect()
}

/// Inverse of [`backward_to_forward`].
pub fn forward_to_backward<V: Clone + PartialEq>(line: &CadlagPath<V>) -> CadlagPath<V> {
    line.reflect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reflection_of_single_jump() {
        let mut p = CadlagPath::constant(0.0, 2.0, 'a');
        p.push(0.5, 'b');
        let r = p.reflect();
        assert_eq!((r.start, r.end), (-2.0, 0.0));
        assert_eq!(*r.value_at(-2.0), 'b');
        assert_eq!(*r.value_at(-0.6), 'b');
        // at the jump the reversed path takes the old left limit
        assert_eq!(*r.value_at(-0.5), 'a');
        assert_eq!(*r.value_at(0.0), 'a');
    }

    #[test]
    fn event_free_path_stays_constant() {
        let p = CadlagPath::constant(0.0, 1.0, 3u8);
        let r = p.reflect();
        assert!(r.jumps.is_empty());
        assert_eq!(r.initial, 3);
    }

    #[test]
    fn integral_against_riemann_sum() {
        let mut p = CadlagPath::constant(0.0, 1.0, 1.0f64);
        p.push(0.3, 4.0);
        p.push(0.71, -2.0);
        let exact = p.integral(0.1, 0.9, |v| *v);
        let h = 1e-4;
        let riemann: f64 = (0..8000).map(|k| h * p.value_at(0.1 + (k as f64 + 0.5) * h)).sum();
        assert!((exact - riemann).abs() < 1e-3);
        assert!((exact - (0.2 + 4.0 * 0.41 - 2.0 * 0.19)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn double_reflection_is_identity(
            raw in proptest::collection::vec((0.0f64..5.0, 0u8..4), 0..20)
        ) {
            let mut times: Vec<(f64, u8)> = raw;
            times.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut p = CadlagPath::constant(0.0, 5.0, 9u8);
            for (t, v) in times {
                p.push(t, v);
            }
            prop_assert_eq!(p.reflect().reflect(), p);
        }
    }
}
