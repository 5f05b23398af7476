use std::sync::Arc;

use super::{tuple_admissible, Colour, ColouredStructure, RelStructure, Semantics, Vocabulary};
use crate::error::{Error, Result};
use crate::pregeometry::{FlatId, Point, Pregeometry};

/// Visits candidate tuples in lexicographic order: all tuples in ordered
/// mode, strictly increasing ones (orbit representatives) in symmetric mode.
pub fn for_each_candidate_tuple(universe: u32, arity: u32, symmetric: bool, mut f: impl FnMut(&[Point])) {
    let k = arity as usize;
    if k == 0 || (symmetric && (universe as usize) < k) || universe == 0 {
        return;
    }
    let mut t: Vec<Point> = if symmetric {
        (0..arity).map(Point).collect()
    } else {
        vec![Point(0); k]
    };
    loop {
        f(&t);
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            let max = if symmetric { universe - (k - i) as u32 } else { universe - 1 };
            if t[i].0 < max {
                t[i].0 += 1;
                for j in i + 1..k {
                    t[j] = if symmetric { Point(t[j - 1].0 + 1) } else { Point(0) };
                }
                break;
            }
        }
    }
}

/// Tuples of the given arity that may be related under `colours`.
pub fn admissible_tuples(
    pg: &Pregeometry,
    arity: u32,
    symmetric: bool,
    colours: &[Colour],
    sem: Semantics,
) -> Vec<Vec<Point>> {
    let mut out = Vec::new();
    let mut flats: Vec<FlatId> = Vec::new();
    for_each_candidate_tuple(pg.universe_size(), arity, symmetric, |t| {
        pg.flats_in_closure_into(t, &mut flats);
        if tuple_admissible(sem, colours, &flats, t.iter().filter_map(|&p| pg.flat_of(p))) {
            out.push(t.to_vec());
        }
    });
    out
}

fn for_each_colouring(flats: usize, l: Colour, mut f: impl FnMut(&[Colour])) {
    let mut c = vec![1 as Colour; flats];
    loop {
        f(&c);
        let mut i = flats;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] < l {
                c[i] += 1;
                for x in &mut c[i + 1..] {
                    *x = 1;
                }
                break;
            }
        }
    }
}

fn colouring_count(flats: usize, l: Colour, cap: u128) -> Result<u128> {
    let mut n: u128 = 1;
    for _ in 0..flats {
        n = n.saturating_mul(l as u128);
        if n > cap {
            return Err(Error::cap("colourings", n, cap));
        }
    }
    Ok(n)
}

/// Number of valid coloured structures: the sum over colourings of
/// `2^(admissible tuples)`. Saturates at `u128::MAX`.
pub fn count_structures(pg: &Pregeometry, vocab: &Vocabulary, l: Colour, sem: Semantics, cap: u128) -> Result<u128> {
    colouring_count(pg.num_flats1(), l, cap)?;
    let mut total: u128 = 0;
    for_each_colouring(pg.num_flats1(), l, |c| {
        let adm: usize = vocab
            .symbols()
            .iter()
            .map(|s| admissible_tuples(pg, s.arity, vocab.symmetric(), c, sem).len())
            .sum();
        let w = if adm >= 127 { u128::MAX } else { 1u128 << adm };
        total = total.saturating_add(w);
    });
    Ok(total)
}

/// Every valid coloured structure on `pg`, each once. Colourings run in
/// lexicographic order, relation subsets by increasing bitmask over the
/// admissible tuples.
pub fn enumerate_coloured(
    pg: &Arc<Pregeometry>,
    vocab: &Arc<Vocabulary>,
    l: Colour,
    sem: Semantics,
    cap: u128,
) -> Result<Vec<ColouredStructure>> {
    let total = count_structures(pg, vocab, l, sem, cap)?;
    if total > cap {
        return Err(Error::cap("structures", total, cap));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut failure = None;
    for_each_colouring(pg.num_flats1(), l, |c| {
        if failure.is_some() {
            return;
        }
        let adm: Vec<(usize, Vec<Point>)> = vocab
            .symbols()
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                admissible_tuples(pg, s.arity, vocab.symmetric(), c, sem).into_iter().map(move |t| (i, t))
            })
            .collect();
        for mask in 0u64..(1u64 << adm.len()) {
            let mut rel = RelStructure::empty(pg.clone(), vocab.clone());
            for (bit, (sym, t)) in adm.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    rel.insert_rep(*sym, t.clone());
                }
            }
            match ColouredStructure::new(rel, l, c.to_vec()) {
                Ok(m) => out.push(m),
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
