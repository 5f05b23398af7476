use std::sync::Arc;

use super::{ColouredStructure, RelStructure};
use crate::error::{Error, Result};
use crate::pregeometry::{Flat, Point, Pregeometry};

/// The d-dimensional reduct: colours survive iff `d ≥ 1`, a related tuple
/// survives iff its closure has rank at most `d`.
pub fn reduct_dim(m: &ColouredStructure, d: u32) -> ColouredStructure {
    let pg = m.pg();
    let mut rel = m.rel().clone();
    for set in rel.rels_mut() {
        set.retain(|t| pg.rank_unchecked(t) <= d);
    }
    if d >= 1 {
        ColouredStructure { rel, l: m.l, colours: m.colours.clone() }
    } else {
        ColouredStructure::uncoloured(rel, m.l)
    }
}

/// The closed substructure on `f`, re-indexed onto a standard pregeometry of
/// rank `rank(f)`. Also returns the embedding as a vector from new points to
/// points of `m`.
pub fn closed_substructure(m: &ColouredStructure, f: &Flat) -> Result<(ColouredStructure, Vec<Point>)> {
    let pg = m.pg();
    let closed = pg.closure(f.points())?;
    if closed.points() != f.points() {
        return Err(Error::pre("substructure universe is not closed"));
    }
    if f.len() as u32 == pg.universe_size() {
        return Ok((m.clone(), pg.points().collect()));
    }
    let sub = Arc::new(pg.family().build(f.rank())?);
    let embed = sub_embedding(&sub, pg, f)?;
    let mut inverse = std::collections::HashMap::new();
    for (i, &p) in embed.iter().enumerate() {
        inverse.insert(p, Point(i as u32));
    }
    let mut rel = RelStructure::empty(sub.clone(), m.rel().vocab_arc().clone());
    for sym in 0..m.vocab().len() {
        for t in m.rel().stored(sym) {
            if let Some(img) = t.iter().map(|p| inverse.get(p).copied()).collect::<Option<Vec<_>>>() {
                rel.insert(sym, &img)?;
            }
        }
    }
    let out = match m.colours() {
        Some(cols) => {
            let sub_cols = sub
                .one_dim_flats()
                .iter()
                .map(|fl| {
                    let p = embed[fl.points().iter().find(|p| !sub.in_closure_of_empty(**p)).unwrap().idx()];
                    cols[pg.flat_of(p).expect("outside closure of empty set").idx()]
                })
                .collect();
            ColouredStructure::new(rel, m.l, sub_cols)?
        }
        None => ColouredStructure::uncoloured(rel, m.l),
    };
    Ok((out, embed))
}

/// The standard closure-preserving embedding of `sub` onto the flat `f` of
/// `pg`: greedy bases in ascending order are matched and extended.
pub(crate) fn sub_embedding(sub: &Pregeometry, pg: &Pregeometry, f: &Flat) -> Result<Vec<Point>> {
    let all: Vec<Point> = sub.points().collect();
    let src = sub.greedy_basis(&all);
    let dst = pg.greedy_basis(f.points());
    let map = sub.extend_independent_iso(&src, pg, &dst)?;
    if map.len() != all.len() {
        return Err(Error::domain("flat is not a copy of the standard pregeometry"));
    }
    Ok(map.into_values().collect())
}

/// Replaces `m` on the closed set `a` by `a_new`, keeping `m` on every other
/// closed set of rank at most `rank(a)`.
///
/// `a_new` lives on the standard pregeometry of rank `rank(a)`, indexed as
/// [`closed_substructure`] indexes it. It must agree with `m` on all proper
/// closed subsets of `a`.
pub fn substitute(m: &ColouredStructure, a: &Flat, a_new: &ColouredStructure) -> Result<ColouredStructure> {
    let (old, embed) = closed_substructure(m, a)?;
    if old.pg() != a_new.pg() || old.vocab() != a_new.vocab() {
        return Err(Error::pre("replacement differs in pregeometry or vocabulary"));
    }
    let k1 = a.rank();
    if k1 == 0 {
        return Ok(m.clone());
    }
    let (Some(old_cols), Some(new_cols)) = (old.colours(), a_new.colours()) else {
        return Err(Error::pre("substitution needs coloured structures"));
    };
    let sub = a_new.pg();
    if k1 >= 2 && old_cols != new_cols {
        return Err(Error::pre("replacement recolours a proper closed subset"));
    }
    for sym in 0..m.vocab().len() {
        let lower = |s: &ColouredStructure| -> Vec<Vec<Point>> {
            s.rel().stored(sym).iter().filter(|t| sub.rank_unchecked(t) < k1).cloned().collect()
        };
        if lower(&old) != lower(a_new) {
            return Err(Error::pre("replacement changes relations on a proper closed subset"));
        }
    }
    let pg = m.pg();
    let mut cols = m.colours().expect("coloured").to_vec();
    for (i, fl) in sub.one_dim_flats().iter().enumerate() {
        let p = embed[fl.points().iter().find(|p| !sub.in_closure_of_empty(**p)).unwrap().idx()];
        cols[pg.flat_of(p).expect("outside closure of empty set").idx()] = new_cols[i];
    }
    let mut rel = m.rel().clone();
    if k1 == 1 {
        for set in rel.rels_mut() {
            set.clear();
        }
    } else {
        for set in rel.rels_mut() {
            set.retain(|t| {
                let r = pg.rank_unchecked(t);
                r < k1 || (r == k1 && !t.iter().all(|&p| a.contains(p)))
            });
        }
        for sym in 0..m.vocab().len() {
            for t in a_new.rel().stored(sym) {
                if sub.rank_unchecked(t) == k1 {
                    let img: Vec<Point> = t.iter().map(|p| embed[p.idx()]).collect();
                    rel.insert(sym, &img)?;
                }
            }
        }
    }
    ColouredStructure::new(rel, m.l, cols)
}
