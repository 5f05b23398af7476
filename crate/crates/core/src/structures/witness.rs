use std::sync::Arc;

use super::{validate, Colour, ColouredStructure, RelStructure, Semantics, Vocabulary};
use crate::error::{Error, Result};
use crate::pregeometry::{Family, FlatId, Point, Pregeometry};

/// A strongly coloured structure in which two points of one colour are
/// tied together by related tuples through one point of every other colour.
#[derive(Debug, Clone)]
pub struct StrongWitness {
    pub structure: ColouredStructure,
    pub a: Point,
    pub b: Point,
    /// One point per other colour, in colour order.
    pub v: Vec<Point>,
    /// The independent generating set, `a`, `b`, `v`, then fillers.
    pub generators: Vec<Point>,
}

/// Size of the generating set for the given colour count and depth `t`.
pub fn witness_generator_count(l: u32, t: u32) -> u32 {
    let fill = t.saturating_sub(2);
    2 + (l - 1) + fill * 2 * (l - 1) + fill * (l - 1) * (l.saturating_sub(2)) / 2
}

/// Builds the witness on the first symbol of `vocab`; other symbols stay
/// empty. `a` and `b` receive colour `colour_of_ab`.
pub fn build_witness_b_strong(
    family: Family,
    vocab: &Arc<Vocabulary>,
    l: Colour,
    t: u32,
    colour_of_ab: Colour,
) -> Result<StrongWitness> {
    let lu = l as u32;
    if l < 2 || colour_of_ab == 0 || colour_of_ab > l {
        return Err(Error::pre("need l ≥ 2 and a colour in 1..=l"));
    }
    if t < 2 || family.flats_in_rank(t) > lu as u128 {
        return Err(Error::pre(format!("depth {t} is not admissible for {l} colours in this family")));
    }
    let r1 = vocab.arity(0) as usize;
    let size = witness_generator_count(lu, t);
    let pg = Arc::new(family.build(size).map_err(|e| Error::pre(format!("family cannot host rank {size}: {e}")))?);
    let all: Vec<Point> = pg.points().collect();
    let gens = pg.greedy_basis(&all);
    if gens.len() as u32 != size {
        return Err(Error::pre(format!("family cannot host rank {size}")));
    }
    let mut next = gens.iter().copied();
    let a = next.next().unwrap();
    let b = next.next().unwrap();
    let v: Vec<Point> = (2..=lu).map(|_| next.next().unwrap()).collect();
    let fill = (t - 2) as usize;
    let mut take = |n: usize| -> Vec<Point> { (0..n).map(|_| next.next().unwrap()).collect() };
    // (apex, other, fillers): apex is a, b, or v_k with k > i.
    let mut groups: Vec<(Point, Point, Vec<Point>)> = Vec::new();
    for &vi in &v {
        groups.push((a, vi, take(fill)));
    }
    for &vi in &v {
        groups.push((b, vi, take(fill)));
    }
    for k in 0..v.len() {
        for i in 0..k {
            groups.push((v[k], v[i], take(fill)));
        }
    }

    let mut cols: Vec<Colour> = vec![0; pg.num_flats1()];
    let flat = |p: Point| pg.flat_of(p).expect("generator outside closure of empty set");
    cols[flat(a).idx()] = 1;
    cols[flat(b).idx()] = 1;
    for (i, &vi) in v.iter().enumerate() {
        cols[flat(vi).idx()] = (i + 2) as Colour;
    }
    let mut rel = RelStructure::empty(pg.clone(), vocab.clone());
    for (x, y, us) in &groups {
        let mut span = vec![*x, *y];
        span.extend_from_slice(us);
        let inside = pg.flats_in_closure(&span);
        colour_injectively(&mut cols, &inside, l)?;
        let w = fillers(&pg, &span, *x, *y, r1 - 2, vocab.symmetric())?;
        let mut tuple = vec![*x, *y];
        tuple.extend(w);
        rel.insert(0, &tuple)?;
    }
    for c in cols.iter_mut().filter(|c| **c == 0) {
        *c = 1;
    }
    if colour_of_ab != 1 {
        for c in cols.iter_mut() {
            if *c == 1 {
                *c = colour_of_ab;
            } else if *c == colour_of_ab {
                *c = 1;
            }
        }
    }
    let structure = ColouredStructure::new(rel, l, cols)?;
    let bad = validate(&structure, Semantics::STRONG);
    if !bad.is_empty() {
        return Err(Error::domain(format!("witness construction is not strongly coloured: {:?}", bad[0])));
    }
    Ok(StrongWitness { structure, a, b, v, generators: gens })
}

fn colour_injectively(cols: &mut [Colour], inside: &[FlatId], l: Colour) -> Result<()> {
    let used: Vec<Colour> = inside.iter().map(|f| cols[f.idx()]).filter(|&c| c != 0).collect();
    let mut free = (1..=l).filter(|c| !used.contains(c));
    for f in inside {
        if cols[f.idx()] == 0 {
            cols[f.idx()] = free.next().ok_or_else(|| Error::domain("closure has more flats than colours"))?;
        }
    }
    Ok(())
}

/// `n` filler points from `closure(span)`, avoiding `x`, `y` and, where
/// possible, `closure(∅)` and repetitions.
fn fillers(pg: &Pregeometry, span: &[Point], x: Point, y: Point, n: usize, symmetric: bool) -> Result<Vec<Point>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let cl = pg.closure_unchecked(span);
    let mut cand: Vec<Point> =
        cl.points().iter().copied().filter(|&p| p != x && p != y && !pg.in_closure_of_empty(p)).collect();
    cand.extend(cl.points().iter().copied().filter(|&p| pg.in_closure_of_empty(p)));
    if symmetric {
        if cand.len() < n {
            return Err(Error::pre("closure too small for distinct filler entries"));
        }
        return Ok(cand[..n].to_vec());
    }
    if cand.is_empty() {
        cand = vec![x, y];
    }
    Ok((0..n).map(|i| cand[i % cand.len()]).collect())
}
