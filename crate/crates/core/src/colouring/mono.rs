//! Monochromatic flats, the minimal-dimension probe for monochromatic
//! planes, and the colouring that seeds the weak-case witness.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ColourCsp, Constraint, ConstraintKind, Outcome, Solver};
use crate::error::{Error, Result};
use crate::pregeometry::{Flat, FlatId, Point, Pregeometry};
use crate::structures::{
    for_each_candidate_tuple, validate, Colour, ColouredStructure, RelStructure, Semantics, Vocabulary,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoReport {
    pub colouring: Vec<Colour>,
    /// Maximal monochromatic flats, ordered by member list.
    pub flats: Vec<Flat>,
    /// Rank of the closure of their union.
    pub e: u32,
    pub count: usize,
}

fn is_mono(pg: &Pregeometry, f: &Flat, c: &[Colour]) -> bool {
    let mut col = None;
    for &p in f.points() {
        if let Some(id) = pg.flat_of(p) {
            match col {
                None => col = Some(c[id.idx()]),
                Some(x) if x != c[id.idx()] => return false,
                _ => {}
            }
        }
    }
    true
}

/// Maximal monochromatic flats of rank at least `min_rank`, grown rank by
/// rank from the monochromatic flats of rank `min_rank`.
pub fn maximal_mono_flats(pg: &Pregeometry, c: &[Colour], min_rank: u32, cap: usize) -> Result<MonoReport> {
    if c.len() != pg.num_flats1() {
        return Err(Error::pre("colouring must cover every rank-1 flat"));
    }
    let mut level: Vec<Flat> =
        pg.flats_of_rank(min_rank.max(1), cap)?.into_iter().filter(|f| is_mono(pg, f, c)).collect();
    let mut maximal = Vec::new();
    while !level.is_empty() {
        let mut next: Vec<Flat> = Vec::new();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for f in &level {
            let mut grows = false;
            for p in pg.points() {
                if f.contains(p) {
                    continue;
                }
                let g = pg.flat_from_basis(pg.basis_with(f.basis(), p));
                if is_mono(pg, &g, c) {
                    grows = true;
                    if seen.insert(g.basis().to_vec()) {
                        next.push(g);
                    }
                }
            }
            if !grows {
                maximal.push(f.clone());
            }
        }
        level = next;
    }
    maximal.sort_by(|a, b| a.points().cmp(b.points()));
    let union: Vec<Point> = maximal.iter().flat_map(|f| f.points().iter().copied()).collect();
    let e = pg.rank_unchecked(&union);
    Ok(MonoReport { colouring: c.to_vec(), count: maximal.len(), flats: maximal, e })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RamseyLevel {
    pub n: u32,
    /// A colouring with no monochromatic flat of the target rank.
    pub avoiding: Option<Vec<Colour>>,
    pub nodes: u64,
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RamseyReport {
    /// `None` when undecided within `n_max` or the node budget.
    pub min_dim: Option<u32>,
    pub n_max: u32,
    pub levels: Vec<RamseyLevel>,
}

/// Least `n ≤ n_max` such that every l-colouring of the rank-1 flats of
/// `GF(q)^n` leaves a monochromatic flat of rank `target_rank`.
///
/// Each level is a not-all-equal problem over the target flats, solved
/// exhaustively with the first flat pinned to colour 1.
pub fn min_ramsey_dim(q: u32, l: Colour, target_rank: u32, n_max: u32, max_nodes: u64) -> Result<RamseyReport> {
    let mut levels = Vec::new();
    for n in target_rank.max(1)..=n_max {
        let pg = Pregeometry::new(crate::Kind::Linear, q, n)?;
        let targets = pg.flats_of_rank(target_rank, 1 << 22)?;
        let constraints = targets
            .iter()
            .map(|f| {
                let mut flats: Vec<FlatId> = f.points().iter().filter_map(|&p| pg.flat_of(p)).collect();
                flats.sort_unstable();
                flats.dedup();
                Constraint { kind: ConstraintKind::NotAllEqual, flats, symbol: 0, tuple: Vec::new() }
            })
            .collect();
        let csp = ColourCsp { vars: pg.num_flats1(), l, constraints, unsat: Vec::new() };
        let fixed = if csp.vars > 0 { vec![(FlatId(0), 1)] } else { Vec::new() };
        let mut solver = Solver::new(&csp, &fixed, &[]);
        let out = solver.first(max_nodes);
        let nodes = solver.nodes();
        match out {
            Outcome::Found(g) => levels.push(RamseyLevel { n, avoiding: Some(g), nodes, exhausted: true }),
            Outcome::Unsat => {
                levels.push(RamseyLevel { n, avoiding: None, nodes, exhausted: true });
                return Ok(RamseyReport { min_dim: Some(n), n_max, levels });
            }
            Outcome::Unknown => {
                levels.push(RamseyLevel { n, avoiding: None, nodes, exhausted: false });
                return Ok(RamseyReport { min_dim: None, n_max, levels });
            }
        }
    }
    Ok(RamseyReport { min_dim: None, n_max, levels })
}

#[derive(Debug, Clone)]
pub struct C0Report {
    pub c0: Vec<Colour>,
    pub mono: MonoReport,
    pub b: RelStructure,
    pub b1: Point,
    pub b2: Point,
    /// Canonical colourings swept.
    pub swept: usize,
    /// Colourings attaining the optimum; `c0` is the first in sweep order.
    pub maximizers: usize,
}

fn for_each_canonical(n: usize, l: Colour, mut f: impl FnMut(&[Colour])) {
    if n == 0 {
        f(&[]);
        return;
    }
    let mut c = vec![1 as Colour; n];
    loop {
        f(&c);
        let mut i = n;
        loop {
            if i <= 1 {
                return;
            }
            i -= 1;
            let max_before = *c[..i].iter().max().unwrap();
            if c[i] < l && c[i] <= max_before {
                c[i] += 1;
                for x in &mut c[i + 1..] {
                    *x = 1;
                }
                break;
            }
        }
    }
}

/// Sweeps all colourings of `pg` up to colour permutation, picks one that
/// minimizes the rank spanned by its maximal monochromatic flats and then
/// maximizes their number, and builds the structure whose relation (on the
/// first symbol of least arity) holds on the tuples of rank at least 2 not
/// inside any of those flats.
pub fn find_c0_and_build_b(
    pg: &Arc<Pregeometry>,
    l: Colour,
    vocab: &Arc<Vocabulary>,
    sem: Semantics,
    cap: usize,
) -> Result<C0Report> {
    let n = pg.num_flats1();
    let mut count: u128 = 1;
    for _ in 1..n {
        count = count.saturating_mul(l as u128);
    }
    if count > cap as u128 {
        return Err(Error::cap("colouring sweep", count, cap as u128));
    }
    let mut best: Option<MonoReport> = None;
    let mut maximizers = 0;
    let mut swept = 0;
    let mut failure = None;
    for_each_canonical(n, l, |c| {
        if failure.is_some() {
            return;
        }
        swept += 1;
        let rep = match maximal_mono_flats(pg, c, 2, cap) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let better = match &best {
            None => true,
            Some(b) => (rep.e, std::cmp::Reverse(rep.count)) < (b.e, std::cmp::Reverse(b.count)),
        };
        let tie = best.as_ref().is_some_and(|b| rep.e == b.e && rep.count == b.count);
        if better {
            best = Some(rep);
            maximizers = 1;
        } else if tie {
            maximizers += 1;
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let mono = best.ok_or_else(|| Error::domain("no colourings to sweep"))?;
    if mono.count == 0 {
        return Err(Error::domain(format!(
            "some {l}-colouring of rank {} has no monochromatic flat of rank 2; raise the rank",
            pg.rank()
        )));
    }
    let sym = (0..vocab.len()).min_by_key(|&i| (vocab.arity(i), i)).expect("nonempty vocabulary");
    let mut b = RelStructure::empty(pg.clone(), vocab.clone());
    let mut reps = Vec::new();
    for_each_candidate_tuple(pg.universe_size(), vocab.arity(sym), vocab.symmetric(), |t| {
        if pg.rank_unchecked(t) >= 2 && !mono.flats.iter().any(|w| t.iter().all(|&p| w.contains(p))) {
            reps.push(t.to_vec());
        }
    });
    for t in reps {
        b.insert_rep(sym, t);
    }
    let w1: Vec<Point> = mono.flats[0].points().iter().copied().filter(|&p| !pg.in_closure_of_empty(p)).collect();
    let basis = pg.greedy_basis(&w1);
    let (b1, b2) = (basis[0], basis[1]);
    let coloured = ColouredStructure::new(b.clone(), l, mono.colouring.clone())?;
    let bad = validate(&coloured, sem);
    if !bad.is_empty() {
        return Err(Error::domain(format!("chosen colouring does not colour the witness: {:?}", bad[0])));
    }
    Ok(C0Report { c0: mono.colouring.clone(), mono, b, b1, b2, swept, maximizers })
}
