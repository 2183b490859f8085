//! Forward simulation of the historical Moran model.
//!
//! Every resampling event `i -> j` gives site `j` a new lineage node whose
//! parent is the current node of site `i`, so the full past of `i` is
//! shared instead of copied. Node ids grow with birth time, which makes
//! common-ancestor searches a simple two-pointer walk.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lines::AncestralLine;
use crate::params::{ModelParams, Site, Type};
use crate::rng::{exponential, pick_weighted};
use crate::stationary::StationaryTypeLaw;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct LineageNode {
    pub birth: f64,
    pub type_at_birth: Type,
    pub site: Site,
    pub parent: Option<NodeId>,
    /// Type changes after birth, in time order.
    pub mutations: Vec<(f64, Type)>,
}

impl LineageNode {
    pub fn current_type(&self) -> Type {
        self.mutations.last().map_or(self.type_at_birth, |&(_, u)| u)
    }

    /// Type at Time `s >= birth`.
    pub fn type_at(&self, s: f64) -> Type {
        let k = self.mutations.partition_point(|&(t, _)| t <= s);
        if k == 0 {
            self.type_at_birth
        } else {
            self.mutations[k - 1].1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HmmEventKind {
    Mutation {
        site: Site,
        new_type: Type,
    },
    /// The individual on `src` replaces the one on `dst`.
    Resampling {
        src: Site,
        dst: Site,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmmEvent {
    pub time: f64,
    pub kind: HmmEventKind,
}

/// All extended ancestral lines of the population, stored as an
/// append-only forest.
#[derive(Debug, Clone)]
pub struct LineageForest {
    pub time_origin: f64,
    pub now: f64,
    nodes: Vec<LineageNode>,
    heads: Vec<NodeId>,
}

impl LineageForest {
    pub fn n(&self) -> usize {
        self.heads.len()
    }

    pub fn nodes(&self) -> &[LineageNode] {
        &self.nodes
    }

    pub fn head(&self, site: Site) -> NodeId {
        self.heads[site]
    }

    pub fn node(&self, id: NodeId) -> &LineageNode {
        &self.nodes[id]
    }

    /// Current types `eta*`.
    pub fn types(&self) -> Vec<Type> {
        self.heads.iter().map(|&h| self.nodes[h].current_type()).collect()
    }

    /// The ancestor of `site` alive at Time `s`.
    pub fn ancestor_at(&self, site: Site, s: f64) -> NodeId {
        let mut x = self.heads[site];
        while self.nodes[x].birth > s {
            match self.nodes[x].parent {
                Some(p) => x = p,
                None => break,
            }
        }
        x
    }

    /// Extended ancestral line of `site` on `[time_origin, now]`.
    pub fn ancestral_line(&self, site: Site) -> AncestralLine {
        let mut chain = vec![self.heads[site]];
        while let Some(p) = self.nodes[*chain.last().unwrap()].parent {
            chain.push(p);
        }
        chain.reverse();
        let root = &self.nodes[chain[0]];
        let mut line = AncestralLine::constant(self.time_origin, self.now, (root.type_at_birth, root.site));
        for (k, &id) in chain.iter().enumerate() {
            let node = &self.nodes[id];
            let until = chain.get(k + 1).map_or(f64::INFINITY, |&c| self.nodes[c].birth);
            line.push(node.birth.max(self.time_origin), (node.type_at_birth, node.site));
            for &(t, u) in node.mutations.iter().take_while(|(t, _)| *t < until) {
                line.push(t, (u, node.site));
            }
        }
        line
    }

    /// `2 (now - tau)` where `tau` is the last Time at which the extended
    /// ancestral lines of `i` and `j` coincide, or the time origin if they
    /// never do.
    pub fn genealogical_distance(&self, i: Site, j: Site) -> f64 {
        if i == j {
            return 0.0;
        }
        let (mut a, mut b) = (Some(self.heads[i]), Some(self.heads[j]));
        let (mut child_a, mut child_b): (Option<NodeId>, Option<NodeId>) = (None, None);
        let tau = loop {
            match (a, b) {
                (Some(x), Some(y)) if x == y => {
                    let birth = |c: Option<NodeId>| c.map_or(self.now, |c| self.nodes[c].birth);
                    break birth(child_a).min(birth(child_b));
                }
                (Some(x), Some(y)) => {
                    if x > y {
                        child_a = a;
                        a = self.nodes[x].parent;
                    } else {
                        child_b = b;
                        b = self.nodes[y].parent;
                    }
                }
                _ => break self.time_origin,
            }
        };
        2.0 * (self.now - tau)
    }

    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.genealogical_distance(i, j)).collect()).collect()
    }

    fn apply(&mut self, kind: HmmEventKind, time: f64) {
        match kind {
            HmmEventKind::Mutation { site, new_type } => {
                let node = &mut self.nodes[self.heads[site]];
                if node.current_type() != new_type {
                    node.mutations.push((time, new_type));
                }
            }
            HmmEventKind::Resampling { src, dst } => {
                if src == dst {
                    return;
                }
                let parent = self.heads[src];
                let node = LineageNode {
                    birth: time,
                    type_at_birth: self.nodes[parent].current_type(),
                    site: dst,
                    parent: Some(parent),
                    mutations: Vec::new(),
                };
                self.nodes.push(node);
                self.heads[dst] = self.nodes.len() - 1;
            }
        }
    }
}

/// Forest in which every site carries a constant path through its initial
/// type, starting at Time `c`.
pub fn init_forest(p: &ModelParams, c: f64, initial_types: &[Type]) -> Result<LineageForest> {
    if initial_types.len() != p.n {
        return Err(Error::LengthMismatch { expected: p.n, got: initial_types.len() });
    }
    if let Some(&u) = initial_types.iter().find(|&&u| u >= p.d) {
        return Err(Error::InvalidParams(format!("type {u} outside 0..{}", p.d)));
    }
    let nodes = initial_types
        .iter()
        .enumerate()
        .map(|(i, &u)| LineageNode { birth: c, type_at_birth: u, site: i, parent: None, mutations: Vec::new() })
        .collect();
    Ok(LineageForest { time_origin: c, now: c, nodes, heads: (0..p.n).collect() })
}

/// Total event rate `N^2/2 + N B`. The resampling part does not depend on
/// the configuration because the selective terms cancel over ordered pairs.
pub fn total_rate(p: &ModelParams) -> f64 {
    let n = p.n as f64;
    n * n / 2.0 + n * p.mutation_rate
}

/// Samples the next event without applying it; returns the holding time.
fn sample_event<R: Rng + ?Sized>(f: &LineageForest, p: &ModelParams, rng: &mut R) -> (f64, HmmEventKind) {
    let n = p.n as f64;
    let total = total_rate(p);
    let dt = exponential(rng, total);
    let kind = if rng.random::<f64>() * total < n * p.mutation_rate {
        let site = rng.random_range(0..p.n);
        let from = f.nodes[f.heads[site]].current_type();
        let new_type = pick_weighted(rng, (0..p.d).map(|u| p.kernel(from, u)), 1.0);
        HmmEventKind::Mutation { site, new_type }
    } else {
        // ordered pair (src, dst) with probability proportional to its rate
        let bound = 0.5 + p.sel_unit();
        loop {
            let src = rng.random_range(0..p.n);
            let dst = rng.random_range(0..p.n);
            let rate = p.resampling_rate(f.nodes[f.heads[src]].current_type(), f.nodes[f.heads[dst]].current_type());
            if rng.random::<f64>() * bound < rate {
                break HmmEventKind::Resampling { src, dst };
            }
        }
    };
    (dt, kind)
}

/// Advances to the next event and applies it. No-op events (self
/// resampling, mutation to the current type) advance the clock only.
pub fn step_forest<R: Rng + ?Sized>(f: &mut LineageForest, p: &ModelParams, rng: &mut R) -> HmmEvent {
    let (dt, kind) = sample_event(f, p, rng);
    f.now += dt;
    let time = f.now;
    f.apply(kind, time);
    HmmEvent { time, kind }
}

/// Runs until Time `t`; the last holding time is cut at `t`. Returns the
/// events that were applied.
pub fn run_until<R: Rng + ?Sized>(
    f: &mut LineageForest,
    p: &ModelParams,
    t: f64,
    rng: &mut R,
) -> Result<Vec<HmmEvent>> {
    if t < f.now {
        return Err(Error::TimeBeforeNow { target: t, now: f.now });
    }
    let mut events = Vec::new();
    loop {
        let (dt, kind) = sample_event(f, p, rng);
        if f.now + dt > t {
            f.now = t;
            return Ok(events);
        }
        f.now += dt;
        let time = f.now;
        f.apply(kind, time);
        events.push(HmmEvent { time, kind });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatOutcome {
    Fixed(Type),
    /// The horizon cap was reached before one Time-`t` ancestor took over.
    Pending,
}

/// Default horizon cap for fixation, in time units per site.
pub const CAT_HORIZON_PER_SITE: f64 = 50.0;

/// Type at Time `t` of the individual whose descendants eventually make up
/// the whole population, started from `initial_types` at Time `c`.
pub fn cat_fixation_type<R: Rng + ?Sized>(
    p: &ModelParams,
    c: f64,
    initial_types: &[Type],
    t: f64,
    rng: &mut R,
) -> Result<CatOutcome> {
    cat_fixation_type_capped(p, c, initial_types, t, CAT_HORIZON_PER_SITE * p.n as f64, rng)
}

pub fn cat_fixation_type_capped<R: Rng + ?Sized>(
    p: &ModelParams,
    c: f64,
    initial_types: &[Type],
    t: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<CatOutcome> {
    if t < c {
        return Err(Error::TimeBeforeNow { target: t, now: c });
    }
    let mut f = init_forest(p, c, initial_types)?;
    run_until(&mut f, p, t, rng)?;
    // the Time-t ancestor of each site, and how many sites descend from each
    let mut anchor: Vec<NodeId> = f.heads.clone();
    let mut counts = vec![0usize; f.nodes.len()];
    for &a in &anchor {
        counts[a] += 1;
    }
    let mut distinct = p.n;
    let stop = t + horizon;
    while distinct > 1 {
        let ev = step_forest(&mut f, p, rng);
        if f.now > stop {
            return Ok(CatOutcome::Pending);
        }
        if let HmmEventKind::Resampling { src, dst } = ev.kind {
            if src != dst && anchor[src] != anchor[dst] {
                counts[anchor[dst]] -= 1;
                if counts[anchor[dst]] == 0 {
                    distinct -= 1;
                }
                anchor[dst] = anchor[src];
                counts[anchor[src]] += 1;
            }
        }
    }
    Ok(CatOutcome::Fixed(f.nodes[anchor[0]].type_at(t)))
}

/// I.i.d. initial types with marginal `nu`.
pub fn sample_iid_types<R: Rng + ?Sized>(nu: &[f64], n: usize, rng: &mut R) -> Vec<Type> {
    (0..n).map(|_| pick_weighted(rng, nu.iter().copied(), 1.0)).collect()
}

/// An exchangeable configuration drawn from the stationary law.
pub fn sample_stationary_types<R: Rng + ?Sized>(law: &StationaryTypeLaw, rng: &mut R) -> Vec<Type> {
    let k = pick_weighted(rng, law.weights.iter().copied(), 1.0);
    let mut types: Vec<Type> = law.counts[k].iter().enumerate().flat_map(|(u, &c)| std::iter::repeat_n(u, c)).collect();
    // Fisher-Yates
    for i in (1..types.len()).rev() {
        let j = rng.random_range(0..=i);
        types.swap(i, j);
    }
    types
}

/// Event log with header `time,kind,src,dst_or_type`.
pub fn events_to_csv(events: &[HmmEvent]) -> String {
    let mut out = String::from("time,kind,src,dst_or_type\n");
    for e in events {
        match e.kind {
            HmmEventKind::Mutation { site, new_type } => writeln!(out, "{:.12},mutation,{site},{new_type}", e.time),
            HmmEventKind::Resampling { src, dst } => writeln!(out, "{:.12},resampling,{src},{dst}", e.time),
        }
        .unwrap();
    }
    out
}

/// Distance matrix as CSV with a header row of site labels.
pub fn distance_matrix_csv(f: &LineageForest) -> String {
    let m = f.distance_matrix();
    let mut out = String::from("site");
    for j in 0..m.len() {
        write!(out, ",{j}").unwrap();
    }
    out.push('\n');
    for (i, row) in m.iter().enumerate() {
        write!(out, "{i}").unwrap();
        for v in row {
            write!(out, ",{v:.12}").unwrap();
        }
        out.push('\n');
    }
    out
}
