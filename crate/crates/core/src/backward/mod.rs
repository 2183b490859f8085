//! The backward process: marked partitions of the tagged individuals
//! together with type subsets on the life-sites not occupied by them.

mod state;
mod transitions;

use std::fmt::Write as _;

use rand::Rng;

pub use state::{contains, full_set, prefix_set, set_max, set_min, BpState, TypeSet, MAX_TYPES};
pub use transitions::{enumerate_clauses, enumerate_transitions, exit_rate, feynman_kac_v, BpKind, BpTransition};

use crate::error::{Error, Result};
use crate::lines::{AncestralLine, CadlagPath};
use crate::params::{ModelParams, Type};
use crate::rng::{exponential, pick_weighted};

/// Recorded sample path of the backward process on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BpPath {
    pub initial: BpState,
    pub events: Vec<(f64, BpTransition)>,
    pub horizon: f64,
}

impl BpPath {
    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> &BpState {
        let k = self.events.partition_point(|(s, _)| *s <= t);
        if k == 0 {
            &self.initial
        } else {
            &self.events[k - 1].1.target
        }
    }

    pub fn final_state(&self) -> &BpState {
        self.events.last().map_or(&self.initial, |(_, tr)| &tr.target)
    }

    /// Segments `(from, to, state)` covering `[0, horizon]`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, &BpState)> + '_ {
        let starts = std::iter::once((0.0, &self.initial)).chain(self.events.iter().map(|(t, tr)| (*t, &tr.target)));
        let ends = self.events.iter().map(|(t, _)| *t).chain(std::iter::once(self.horizon));
        starts.zip(ends).map(|((a, s), b)| (a, b, s))
    }

    /// Path of tagged individual `j`'s mark `(type, site)` on `[0, horizon]`.
    pub fn mark_path(&self, j: usize) -> AncestralLine {
        let mut path = CadlagPath::constant(0.0, self.horizon, self.initial.marks[j]);
        for (t, tr) in &self.events {
            path.push(*t, tr.target.marks[j]);
        }
        path
    }

    /// First time at which tagged individuals `i` and `j` share a site.
    pub fn coalescence_time(&self, i: usize, j: usize) -> Option<f64> {
        let same = |s: &BpState| s.marks[i].1 == s.marks[j].1;
        if same(&self.initial) {
            return Some(0.0);
        }
        self.events.iter().find(|(_, tr)| same(&tr.target)).map(|(t, _)| *t)
    }

    /// Event log with header `time,kind,state_hash`; the first row holds the
    /// initial state with kind `start`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,kind,state_hash\n");
        writeln!(out, "0,start,{}", self.initial.digest()).unwrap();
        for (t, tr) in &self.events {
            writeln!(out, "{t:.12},{},{}", tr.kind, tr.target.digest()).unwrap();
        }
        out
    }
}

/// Draws one transition out of `s` from a precomputed list.
pub(crate) fn choose<'a, R: Rng + ?Sized>(rng: &mut R, list: &'a [BpTransition], total: f64) -> &'a BpTransition {
    &list[pick_weighted(rng, list.iter().map(|t| t.rate), total)]
}

/// Gillespie simulation up to time `t_max`, recording every event.
pub fn simulate_bp<R: Rng + ?Sized>(start: &BpState, p: &ModelParams, t_max: f64, rng: &mut R) -> Result<BpPath> {
    if !(t_max >= 0.0) {
        return Err(Error::OutOfRange(format!("horizon {t_max} must be >= 0")));
    }
    let mut path = BpPath { initial: start.clone(), events: Vec::new(), horizon: t_max };
    let mut state = start.clone();
    let mut now = 0.0;
    loop {
        let list = enumerate_transitions(&state, p);
        let total: f64 = list.iter().map(|t| t.rate).sum();
        if total <= 0.0 {
            return Ok(path);
        }
        now += exponential(rng, total);
        if now > t_max {
            return Ok(path);
        }
        let tr = choose(rng, &list, total).clone();
        state = tr.target.clone();
        path.events.push((now, tr));
    }
}

/// `int_0^t V(X_s) ds` along a recorded path.
pub fn path_v_integral(path: &BpPath, p: &ModelParams, t: f64) -> Result<f64> {
    if !(0.0..=path.horizon).contains(&t) {
        return Err(Error::OutOfRange(format!("time {t} outside [0, {}]", path.horizon)));
    }
    Ok(path.segments().take_while(|(a, _, _)| *a < t).map(|(a, b, s)| (b.min(t) - a) * feynman_kac_v(s, p)).sum())
}

/// The reversed lines: tagged individual `j`'s mark path mapped from
/// `[0, T]` onto Times `[-T, 0]`, right-continuous.
pub fn reverse_to_lines(path: &BpPath) -> Vec<AncestralLine> {
    (0..path.initial.marks.len()).map(|j| path.mark_path(j).reflect()).collect()
}

/// Types at Time 0 of the tagged individuals, read from reversed lines.
pub fn types_at_present(lines: &[AncestralLine]) -> Vec<Type> {
    lines.iter().map(|l| l.value_at(0.0).0).collect()
}
