use std::collections::HashMap;
use std::fmt;

use super::state::{contains, full_set, prefix_set, set_max, set_min, BpState, TypeSet};
use crate::params::{ModelParams, Site, Type};

/// Transition kinds, labelled as in the definition of the backward process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BpKind {
    /// Mark of a partition element mutates.
    K1a,
    /// An active subset gains a type.
    K1bi,
    /// An active subset loses a type.
    K1bii,
    /// A partition element jumps onto another with the same mark; vacated site gets `K`.
    K2ai,
    /// As `K2ai`, vacated site gets `{0..w}`.
    K2aii,
    /// A partition element jumps to an active site; vacated site gets `K`.
    K2bi,
    /// As `K2bi`, vacated site gets `{0..w}`.
    K2bii,
    /// An active site is reset to `K`.
    K2ci,
    /// An active site is reset to `{0..w}`.
    K2cii,
    /// Two active sites intersect; the second gets `K`.
    K2di,
    /// Two active sites intersect; the second gets `{0..w}`.
    K2dii,
    /// The first gets the upper part of the intersection from `v` on.
    K2diii,
}

impl BpKind {
    pub const ALL: [BpKind; 12] = [
        BpKind::K1a,
        BpKind::K1bi,
        BpKind::K1bii,
        BpKind::K2ai,
        BpKind::K2aii,
        BpKind::K2bi,
        BpKind::K2bii,
        BpKind::K2ci,
        BpKind::K2cii,
        BpKind::K2di,
        BpKind::K2dii,
        BpKind::K2diii,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BpKind::K1a => "1a",
            BpKind::K1bi => "1bi",
            BpKind::K1bii => "1bii",
            BpKind::K2ai => "2ai",
            BpKind::K2aii => "2aii",
            BpKind::K2bi => "2bi",
            BpKind::K2bii => "2bii",
            BpKind::K2ci => "2ci",
            BpKind::K2cii => "2cii",
            BpKind::K2di => "2di",
            BpKind::K2dii => "2dii",
            BpKind::K2diii => "2diii",
        }
    }

    /// Kinds whose rates vanish without selection.
    pub fn needs_selection(self) -> bool {
        !matches!(self, BpKind::K1a | BpKind::K2ai | BpKind::K2bi)
    }
}

impl fmt::Display for BpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpTransition {
    pub target: BpState,
    pub rate: f64,
    pub kind: BpKind,
}

fn move_group(s: &BpState, from: Site, to: Site, vacated: TypeSet, d: usize) -> BpState {
    let mut t = s.clone();
    for m in t.marks.iter_mut() {
        if m.1 == from {
            m.1 = to;
        }
    }
    t.active[from] = vacated;
    t.active[to] = full_set(d);
    t
}

fn with_sets(s: &BpState, changes: &[(Site, TypeSet)]) -> BpState {
    let mut t = s.clone();
    for &(i, a) in changes {
        t.active[i] = a;
    }
    t
}

/// Every clause instance of the definition with a positive rate, one entry
/// per instance, including instances that leave the state unchanged
/// (e.g. a mark mutating to itself).
pub fn enumerate_clauses(s: &BpState, p: &ModelParams) -> Vec<BpTransition> {
    let d = p.d;
    let k = full_set(d);
    let sel = p.sel_unit();
    let b = p.mutation_rate;
    let groups = s.groups();
    let active = s.active_sites();
    let chi = &p.chi;
    let half = |m: Type| 0.5 + sel * (chi[m] - 1.0);
    let dchi = |w: Type| sel * (chi[w + 1] - chi[w]);

    let mut out = Vec::new();
    let mut push = |target: BpState, rate: f64, kind: BpKind| {
        if rate > 0.0 {
            out.push(BpTransition { target, rate, kind });
        }
    };

    for &(site, mark) in &groups {
        for u in 0..d {
            let mut t = s.clone();
            for m in t.marks.iter_mut() {
                if m.1 == site {
                    m.0 = u;
                }
            }
            push(t, b * p.kernel(u, mark), BpKind::K1a);
        }
    }

    for &i in &active {
        let a = s.active[i];
        for u in 0..d {
            for v in 0..d {
                if contains(a, v) && !contains(a, u) {
                    push(with_sets(s, &[(i, a | 1 << u)]), b * p.kernel(u, v), BpKind::K1bi);
                }
                if !contains(a, v) && contains(a, u) && a.count_ones() > 1 {
                    push(with_sets(s, &[(i, a & !(1 << u))]), b * p.kernel(u, v), BpKind::K1bii);
                }
            }
        }
    }

    for &(g, m) in &groups {
        for &(g2, m2) in &groups {
            if g == g2 || m != m2 {
                continue;
            }
            push(move_group(s, g, g2, k, d), half(m), BpKind::K2ai);
            for w in 0..d - 1 {
                push(move_group(s, g, g2, prefix_set(w), d), dchi(w), BpKind::K2aii);
            }
        }
        for &i in &active {
            if !contains(s.active[i], m) {
                continue;
            }
            push(move_group(s, g, i, k, d), half(m), BpKind::K2bi);
            for w in 0..d - 1 {
                push(move_group(s, g, i, prefix_set(w), d), dchi(w), BpKind::K2bii);
            }
        }
    }

    for &i in &active {
        for &(_, m) in &groups {
            if !contains(s.active[i], m) {
                continue;
            }
            push(with_sets(s, &[(i, k)]), half(m), BpKind::K2ci);
            for w in 0..d - 1 {
                push(with_sets(s, &[(i, prefix_set(w))]), dchi(w), BpKind::K2cii);
            }
        }
    }

    for &i in &active {
        for &j in &active {
            if i == j {
                continue;
            }
            let cap = s.active[i] & s.active[j];
            if cap == 0 || cap == k {
                continue;
            }
            push(with_sets(s, &[(i, cap), (j, k)]), half(set_min(cap)), BpKind::K2di);
            for w in 0..d - 1 {
                push(with_sets(s, &[(i, cap), (j, prefix_set(w))]), dchi(w), BpKind::K2dii);
            }
            let mut below = set_min(cap);
            for v in below + 1..d {
                if !contains(cap, v) {
                    continue;
                }
                let upper = cap & !prefix_set(v - 1);
                push(with_sets(s, &[(i, upper), (j, k)]), sel * (chi[v] - chi[below]), BpKind::K2diii);
                below = v;
            }
        }
    }
    out
}

/// All state-changing transitions out of `s`, with rates of clause
/// instances that lead to the same target under the same kind added up.
/// Instances that leave the state unchanged are omitted; they do not act
/// on the generator.
pub fn enumerate_transitions(s: &BpState, p: &ModelParams) -> Vec<BpTransition> {
    let mut index: HashMap<(BpState, BpKind), usize> = HashMap::new();
    let mut out: Vec<BpTransition> = Vec::new();
    for tr in enumerate_clauses(s, p) {
        if tr.target == *s {
            continue;
        }
        match index.get(&(tr.target.clone(), tr.kind)) {
            Some(&at) => out[at].rate += tr.rate,
            None => {
                index.insert((tr.target.clone(), tr.kind), out.len());
                out.push(tr);
            }
        }
    }
    out
}

/// Total rate of leaving `s`.
pub fn exit_rate(s: &BpState, p: &ModelParams) -> f64 {
    enumerate_transitions(s, p).iter().map(|t| t.rate).sum()
}

/// The Feynman-Kac function `V`. For disjoint active subsets the
/// `chi(max)` part of the last sum is taken as 0.
pub fn feynman_kac_v(s: &BpState, p: &ModelParams) -> f64 {
    let d = p.d;
    let k = full_set(d);
    let sel = p.sel_unit();
    let b = p.mutation_rate;
    let groups = s.groups();
    let active = s.active_sites();

    let mut v = 0.0;
    for &(_, m) in &groups {
        v += b * (p.column_sum(m) - 1.0);
    }
    for &i in &active {
        let a = s.active[i];
        if a.count_ones() == 1 {
            let u = set_min(a);
            let off: f64 = (0..d).filter(|&x| x != u).map(|x| p.kernel(u, x)).sum();
            v -= b * off;
        }
    }
    for &(g, m) in &groups {
        for &(g2, m2) in &groups {
            if g != g2 {
                v += if m == m2 { 0.5 + sel * p.chi[m] } else { 0.0 } - 0.5;
            }
        }
    }
    for &(_, m) in &groups {
        for &i in &active {
            v += 2.0 * (if contains(s.active[i], m) { 0.5 + sel * p.chi[m] } else { 0.0 } - 0.5);
        }
    }
    for &i in &active {
        for &j in &active {
            if i == j {
                continue;
            }
            let cap = s.active[i] & s.active[j];
            if cap == 0 {
                v -= 0.5;
            } else if cap != k {
                v += sel * p.chi[set_max(cap)];
            }
        }
    }
    v
}
