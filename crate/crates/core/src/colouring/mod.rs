//! Colourings of rank-1 flats as a constraint satisfaction problem.

mod mono;
mod solver;
mod usearch;


use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pregeometry::{FlatId, Point};
use crate::structures::{Colour, ColourRule, RelStructure, Semantics};

pub use mono::{find_c0_and_build_b, maximal_mono_flats, min_ramsey_dim, C0Report, MonoReport, RamseyLevel, RamseyReport};
pub use solver::{Outcome, Solver};
pub use usearch::{find_u, UFound, USearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    NotAllEqual,
    AllDifferent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    /// Sorted, distinct, at least two.
    pub flats: Vec<FlatId>,
    /// Symbol index and tuple the constraint came from.
    pub symbol: usize,
    pub tuple: Vec<Point>,
}

impl Constraint {
    pub fn satisfied_by(&self, gamma: &[Colour]) -> bool {
        match self.kind {
            ConstraintKind::NotAllEqual => {
                let c0 = gamma[self.flats[0].idx()];
                self.flats.iter().any(|f| gamma[f.idx()] != c0)
            }
            ConstraintKind::AllDifferent => {
                let mut seen = 0u128;
                self.flats.iter().all(|f| {
                    let bit = 1u128 << gamma[f.idx()];
                    let fresh = seen & bit == 0;
                    seen |= bit;
                    fresh
                })
            }
        }
    }
}

/// A related tuple that no colouring can accommodate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnsatMarker {
    pub symbol: usize,
    pub tuple: Vec<Point>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColourCsp {
    pub vars: usize,
    pub l: Colour,
    pub constraints: Vec<Constraint>,
    pub unsat: Vec<UnsatMarker>,
}

impl ColourCsp {
    pub fn is_satisfied_by(&self, gamma: &[Colour]) -> bool {
        self.unsat.is_empty()
            && gamma.len() == self.vars
            && gamma.iter().all(|&c| c >= 1 && c <= self.l)
            && self.constraints.iter().all(|c| c.satisfied_by(gamma))
    }

    pub fn is_trivially_unsat(&self) -> bool {
        !self.unsat.is_empty()
    }
}

/// One constraint per distinct flat set of a related tuple: not-all-equal
/// in the weak case, all-different in the strong case.
pub fn build_csp(s: &RelStructure, l: Colour, sem: Semantics) -> ColourCsp {
    let pg = s.pg();
    let kind = if sem.strong { ConstraintKind::AllDifferent } else { ConstraintKind::NotAllEqual };
    let mut seen: BTreeMap<Vec<FlatId>, ()> = BTreeMap::new();
    let mut constraints = Vec::new();
    let mut unsat = Vec::new();
    let mut flats = Vec::new();
    for sym in 0..s.vocab().len() {
        for t in s.stored(sym) {
            pg.flats_in_closure_into(t, &mut flats);
            if flats.len() < 2 {
                unsat.push(UnsatMarker {
                    symbol: sym,
                    tuple: t.clone(),
                    reason: "closure of a related tuple has rank at most 1".into(),
                });
                continue;
            }
            let scope: Vec<FlatId> = if !sem.strong && sem.rule == ColourRule::Tuple {
                let mut v: Vec<FlatId> = t.iter().filter_map(|&p| pg.flat_of(p)).collect();
                v.sort_unstable();
                v.dedup();
                v
            } else {
                flats.clone()
            };
            if scope.len() < 2 {
                unsat.push(UnsatMarker {
                    symbol: sym,
                    tuple: t.clone(),
                    reason: "entries of a related tuple lie in one rank-1 flat".into(),
                });
                continue;
            }
            if sem.strong && scope.len() > l as usize {
                unsat.push(UnsatMarker {
                    symbol: sym,
                    tuple: t.clone(),
                    reason: format!("closure holds {} rank-1 flats, more than {l} colours", scope.len()),
                });
                continue;
            }
            if seen.insert(scope.clone(), ()).is_none() {
                constraints.push(Constraint { kind, flats: scope, symbol: sym, tuple: t.clone() });
            }
        }
    }
    ColourCsp { vars: pg.num_flats1(), l, constraints, unsat }
}

/// A colouring of `s`, or `None` if there is none. Search is exhaustive.
pub fn find_colouring(s: &RelStructure, l: Colour, sem: Semantics) -> Option<Vec<Colour>> {
    let csp = build_csp(s, l, sem);
    match Solver::new(&csp, &[], &[]).first(u64::MAX) {
        Outcome::Found(g) => Some(g),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Count {
    Exact(u64),
    AtLeast(u64),
}

/// Orbits of colourings under permutations of the colours, counted through
/// canonical representatives (colours introduced in flat order).
pub fn count_colourings_up_to_perm(s: &RelStructure, l: Colour, sem: Semantics, cap: u64) -> Count {
    let csp = build_csp(s, l, sem);
    Solver::new(&csp, &[], &[]).count_canonical(cap)
}

/// Every colouring gives `a` and `b` the same colour.
pub fn same_colour_all(s: &RelStructure, a: Point, b: Point, l: Colour, sem: Semantics) -> Result<bool> {
    let pg = s.pg();
    pg.check(a)?;
    pg.check(b)?;
    let (Some(fa), Some(fb)) = (pg.flat_of(a), pg.flat_of(b)) else {
        return Err(Error::pre("points must lie outside the closure of the empty set"));
    };
    let csp = build_csp(s, l, sem);
    if let Outcome::Unsat = Solver::new(&csp, &[], &[]).first(u64::MAX) {
        return Err(Error::domain("structure is not colourable"));
    }
    if fa == fb {
        return Ok(true);
    }
    Ok(differ_possible(&csp, fa, fb).is_none())
}

/// A colouring separating the two flats, if any. Colour permutations let us
/// fix them to 1 and 2.
fn differ_possible(csp: &ColourCsp, fa: FlatId, fb: FlatId) -> Option<Vec<Colour>> {
    if csp.l < 2 {
        return None;
    }
    let sep = [(fa, fb)];
    match Solver::new(csp, &[(fa, 1), (fb, 2)], &sep).first(u64::MAX) {
        Outcome::Found(g) => Some(g),
        _ => None,
    }
}

/// Classes of rank-1 flats that share a colour in every colouring, with the
/// number of solver calls used. Each block member is certified against the
/// block's first flat by an infeasible separation.
pub fn same_colour_classes(s: &RelStructure, l: Colour, sem: Semantics) -> Result<(Vec<Vec<FlatId>>, usize)> {
    let csp = build_csp(s, l, sem);
    let Outcome::Found(first) = Solver::new(&csp, &[], &[]).first(u64::MAX) else {
        return Err(Error::domain("structure is not colourable"));
    };
    let mut calls = 1;
    let mut key: Vec<Vec<Colour>> = first.iter().map(|&c| vec![c]).collect();
    let blocks_of = |key: &Vec<Vec<Colour>>| -> Vec<Vec<FlatId>> {
        let mut m: BTreeMap<&Vec<Colour>, Vec<FlatId>> = BTreeMap::new();
        for (i, k) in key.iter().enumerate() {
            m.entry(k).or_default().push(FlatId(i as u32));
        }
        let mut v: Vec<Vec<FlatId>> = m.into_values().collect();
        v.sort();
        v
    };
    let mut same: std::collections::HashSet<(FlatId, FlatId)> = Default::default();
    loop {
        let blocks = blocks_of(&key);
        let mut split = false;
        'outer: for block in &blocks {
            let rep = block[0];
            for &f in &block[1..] {
                if same.contains(&(rep, f)) {
                    continue;
                }
                calls += 1;
                if let Some(g) = differ_possible(&csp, rep, f) {
                    for (k, &c) in key.iter_mut().zip(&g) {
                        k.push(c);
                    }
                    split = true;
                    break 'outer;
                }
                same.insert((rep, f));
            }
        }
        if !split {
            return Ok((blocks, calls));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChromaticMin {
    Exact(Colour),
    Exceeds(Colour),
}

/// Least number of colours admitting a colouring, up to `l_max`.
pub fn chromatic_min(s: &RelStructure, sem: Semantics, l_max: Colour) -> ChromaticMin {
    for l in 1..=l_max {
        if find_colouring(s, l, sem).is_some() {
            return ChromaticMin::Exact(l);
        }
    }
    ChromaticMin::Exceeds(l_max)
}
