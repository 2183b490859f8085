use std::fmt;

use crate::error::{Error, Result};
use crate::params::{ModelParams, Site, Type};

/// Subsets of `K` as bit masks (bit `u` set when `u` is in the set).
pub type TypeSet = u32;

pub const MAX_TYPES: usize = 32;

#[inline]
pub fn full_set(d: usize) -> TypeSet {
    if d >= 32 {
        u32::MAX
    } else {
        (1u32 << d) - 1
    }
}

/// `{0, .., w}`.
#[inline]
pub fn prefix_set(w: Type) -> TypeSet {
    full_set(w + 1)
}

#[inline]
pub fn contains(set: TypeSet, u: Type) -> bool {
    set >> u & 1 == 1
}

#[inline]
pub fn set_min(set: TypeSet) -> Type {
    set.trailing_zeros() as Type
}

#[inline]
pub fn set_max(set: TypeSet) -> Type {
    31 - set.leading_zeros() as Type
}

/// State of the backward process: a mark `(type, site)` for every tagged
/// individual `j` and a nonempty type subset for every life-site.
///
/// Tagged individuals sharing a site form one partition element and share
/// the mark. The subset of an occupied site is never read by the dynamics,
/// the duality function or `V`; it is kept at `K` so that equal states
/// compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BpState {
    pub marks: Vec<(Type, Site)>,
    pub active: Vec<TypeSet>,
}

impl BpState {
    /// Initial state for tagged sites `j = 0, .., xi.len() - 1` carrying types `xi`.
    pub fn canonical_start(p: &ModelParams, xi: &[Type]) -> Result<Self> {
        let sites: Vec<Site> = (0..xi.len()).collect();
        Self::canonical_start_at(p, &sites, xi)
    }

    /// Initial state for tagged sites `sites` carrying types `xi`.
    pub fn canonical_start_at(p: &ModelParams, sites: &[Site], xi: &[Type]) -> Result<Self> {
        if sites.len() != xi.len() {
            return Err(Error::LengthMismatch { expected: sites.len(), got: xi.len() });
        }
        if p.d > MAX_TYPES {
            return Err(Error::InvalidParams(format!("at most {MAX_TYPES} types supported")));
        }
        let mut seen = vec![false; p.n];
        for &s in sites {
            if s >= p.n || seen[s] {
                return Err(Error::InvalidParams(format!("tagged site {s} invalid or repeated")));
            }
            seen[s] = true;
        }
        if let Some(&u) = xi.iter().find(|&&u| u >= p.d) {
            return Err(Error::InvalidParams(format!("type {u} outside 0..{}", p.d)));
        }
        Ok(BpState { marks: xi.iter().copied().zip(sites.iter().copied()).collect(), active: vec![full_set(p.d); p.n] })
    }

    pub fn n(&self) -> usize {
        self.active.len()
    }

    pub fn is_occupied(&self, site: Site) -> bool {
        self.marks.iter().any(|&(_, s)| s == site)
    }

    /// Partition elements as `(site, mark)`, sorted by site.
    pub fn groups(&self) -> Vec<(Site, Type)> {
        let mut g: Vec<(Site, Type)> = self.marks.iter().map(|&(u, s)| (s, u)).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    /// Active life-sites (not occupied by a partition element).
    pub fn active_sites(&self) -> Vec<Site> {
        let mut occ = vec![false; self.n()];
        for &(_, s) in &self.marks {
            occ[s] = true;
        }
        (0..self.n()).filter(|&i| !occ[i]).collect()
    }

    /// Tagged individuals grouped by site, for display.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        self.groups().iter().map(|&(s, _)| (0..self.marks.len()).filter(|&j| self.marks[j].1 == s).collect()).collect()
    }

    /// Checks the state-space restrictions.
    pub fn check_invariants(&self, d: usize) -> std::result::Result<(), String> {
        for a in &self.marks {
            for b in &self.marks {
                if a.1 == b.1 && a != b {
                    return Err(format!("marks {a:?} and {b:?} share a site"));
                }
            }
            if a.0 >= d || a.1 >= self.n() {
                return Err(format!("mark {a:?} out of range"));
            }
        }
        let k = full_set(d);
        for (i, &set) in self.active.iter().enumerate() {
            if set == 0 || set & !k != 0 {
                return Err(format!("site {i} has invalid subset {set:#b}"));
            }
            if self.is_occupied(i) && set != k {
                return Err(format!("occupied site {i} not normalized"));
            }
        }
        if self.groups().len() + self.active_sites().len() != self.n() {
            return Err("partition and active sites do not cover I".into());
        }
        Ok(())
    }

    /// Stable hex digest of the canonical form.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for &(u, s) in &self.marks {
            h.update((u as u64).to_le_bytes());
            h.update((s as u64).to_le_bytes());
        }
        h.update([0xff]);
        for &a in &self.active {
            h.update(a.to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    /// Duality function `H*(eta, self)` for a type configuration `eta`.
    pub fn h_star(&self, eta: &[Type]) -> bool {
        self.marks.iter().all(|&(u, s)| eta[s] == u)
            && self.active_sites().into_iter().all(|i| contains(self.active[i], eta[i]))
    }

    /// Same as [`h_star`](Self::h_star) with the configuration encoded as
    /// `sum_i eta_i d^i`.
    pub fn h_star_index(&self, idx: usize, d: usize) -> bool {
        let type_of = |site: Site| (idx / d.pow(site as u32)) % d;
        self.marks.iter().all(|&(u, s)| type_of(s) == u) && (0..self.n()).all(|i| contains(self.active[i], type_of(i)))
    }
}

fn fmt_set(f: &mut fmt::Formatter<'_>, set: TypeSet) -> fmt::Result {
    write!(f, "{{")?;
    let mut first = true;
    for u in 0..32 {
        if contains(set, u) {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{u}")?;
            first = false;
        }
    }
    write!(f, "}}")
}

impl fmt::Display for BpState {
    /// e.g. `[{0,1}:0@2 | 0:{0} 1:{0,1}]`: tagged individuals 0 and 1 on
    /// site 2 marked 0; active sites 0 and 1.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, (block, (site, mark))) in self.partition().iter().zip(self.groups()).enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{{")?;
            for (x, j) in block.iter().enumerate() {
                if x > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{j}")?;
            }
            write!(f, "}}:{mark}@{site}")?;
        }
        write!(f, " |")?;
        for i in self.active_sites() {
            write!(f, " {i}:")?;
            fmt_set(f, self.active[i])?;
        }
        write!(f, "]")
    }
}
