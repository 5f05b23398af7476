use std::collections::BTreeMap;

use super::{enumerate_coloured, ColouredStructure, Semantics, Structure, Vocabulary};
use crate::error::{Error, Result};
use crate::pregeometry::{Family, Flat, Point};

/// An embedding, indexed by source point.
pub type PointMap = Vec<Point>;

struct Search<'a, A: Structure + ?Sized, M: Structure + ?Sized> {
    a: &'a A,
    m: &'a M,
    order: Vec<Point>,
    rank_a: u32,
    colours: bool,
    require_closed: bool,
    limit: usize,
    /// Source and target masks: masked source points map onto masked
    /// target points, and only those.
    restrict: Option<(Vec<bool>, Vec<bool>)>,
    fixed: BTreeMap<Point, Point>,
    img: Vec<Point>,
    used: Vec<bool>,
    out: Vec<PointMap>,
}

impl<A: Structure + ?Sized, M: Structure + ?Sized> Search<'_, A, M> {
    fn consistent(&self, depth: usize, m: Point) -> bool {
        let a = self.order[depth];
        if let Some((src, dst)) = &self.restrict {
            if src[a.idx()] != dst[m.idx()] {
                return false;
            }
        }
        if self.colours && self.a.colour_at(a) != self.m.colour_at(m) {
            return false;
        }
        // Ranks of every subset of size at most rank(A) + 1 that contains the
        // new point; earlier subsets were checked when their last point came.
        let mut sa = Vec::with_capacity(self.rank_a as usize + 1);
        let mut sm = Vec::with_capacity(self.rank_a as usize + 1);
        if !self.subsets_ok(depth, 0, a, m, &mut sa, &mut sm) {
            return false;
        }
        // Relations on tuples through the new point.
        let vocab = self.a.vocab();
        let n = depth + 1;
        let mut ta = Vec::new();
        let mut tm = Vec::new();
        for sym in 0..vocab.len() {
            let k = vocab.arity(sym) as usize;
            let mut idx = vec![0usize; k];
            loop {
                if idx.contains(&depth) {
                    ta.clear();
                    tm.clear();
                    for &i in &idx {
                        ta.push(self.order[i]);
                        tm.push(if i == depth { m } else { self.img[i] });
                    }
                    if self.a.rel().holds(sym, &ta) != self.m.rel().holds(sym, &tm) {
                        return false;
                    }
                }
                let mut j = 0;
                loop {
                    if j == k {
                        break;
                    }
                    idx[j] += 1;
                    if idx[j] == n {
                        idx[j] = 0;
                        j += 1;
                    } else {
                        break;
                    }
                }
                if j == k {
                    break;
                }
            }
        }
        true
    }

    fn subsets_ok(
        &self,
        depth: usize,
        from: usize,
        a: Point,
        m: Point,
        sa: &mut Vec<Point>,
        sm: &mut Vec<Point>,
    ) -> bool {
        sa.push(a);
        sm.push(m);
        let ok = self.a.pg().rank_unchecked(sa) == self.m.pg().rank_unchecked(sm);
        sa.pop();
        sm.pop();
        if !ok {
            return false;
        }
        if sa.len() as u32 >= self.rank_a {
            return true;
        }
        for i in from..depth {
            sa.push(self.order[i]);
            sm.push(self.img[i]);
            let ok = self.subsets_ok(depth, i + 1, a, m, sa, sm);
            sa.pop();
            sm.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    fn run(&mut self, depth: usize) {
        if self.out.len() >= self.limit {
            return;
        }
        if depth == self.order.len() {
            if self.require_closed {
                let c = self.m.pg().closure_unchecked(&self.img);
                if c.len() != self.img.len() {
                    return;
                }
            }
            let mut map = vec![Point(0); self.order.len()];
            for (i, &a) in self.order.iter().enumerate() {
                map[a.idx()] = self.img[i];
            }
            self.out.push(map);
            return;
        }
        let a = self.order[depth];
        let candidates: Vec<Point> = match self.fixed.get(&a) {
            Some(&m) => vec![m],
            None => self.m.pg().points().collect(),
        };
        for m in candidates {
            if self.used[m.idx()] || !self.consistent(depth, m) {
                continue;
            }
            self.used[m.idx()] = true;
            self.img.push(m);
            self.run(depth + 1);
            self.img.pop();
            self.used[m.idx()] = false;
            if self.out.len() >= self.limit {
                return;
            }
        }
    }
}

fn search<A: Structure + ?Sized, M: Structure + ?Sized>(
    a: &A,
    m: &M,
    require_closed: bool,
    limit: usize,
    fixed: &[(Point, Point)],
    restrict: Option<(Vec<bool>, Vec<bool>)>,
) -> Result<Vec<PointMap>> {
    if a.vocab().symbols() != m.vocab().symbols() || a.vocab().symmetric() != m.vocab().symmetric() {
        return Err(Error::pre("embedding needs a common vocabulary"));
    }
    let pa = a.pg();
    for &(x, y) in fixed {
        pa.check(x)?;
        m.pg().check(y)?;
    }
    let mut order: Vec<Point> = fixed.iter().map(|&(x, _)| x).collect();
    let mut placed = vec![false; pa.universe_size() as usize];
    for &p in &order {
        placed[p.idx()] = true;
    }
    let all: Vec<Point> = pa.points().collect();
    for &p in pa.closure_of_empty() {
        if !placed[p.idx()] {
            placed[p.idx()] = true;
            order.push(p);
        }
    }
    for p in pa.greedy_basis(&all) {
        if !placed[p.idx()] {
            placed[p.idx()] = true;
            order.push(p);
        }
    }
    for p in all {
        if !placed[p.idx()] {
            placed[p.idx()] = true;
            order.push(p);
        }
    }
    let mut s = Search {
        a,
        m,
        rank_a: pa.rank(),
        colours: a.has_colours() && m.has_colours(),
        require_closed,
        limit,
        restrict,
        fixed: fixed.iter().copied().collect(),
        img: Vec::with_capacity(order.len()),
        used: vec![false; m.pg().universe_size() as usize],
        out: Vec::new(),
        order,
    };
    s.run(0);
    Ok(s.out)
}

/// Embeddings of `a` into `m`: injective maps preserving closure, relations
/// in both directions and, when both sides are coloured, colours. At most
/// `limit` are returned, in lexicographic search order.
pub fn find_embeddings<A: Structure + ?Sized, M: Structure + ?Sized>(
    a: &A,
    m: &M,
    require_closed_image: bool,
    limit: usize,
) -> Result<Vec<PointMap>> {
    search(a, m, require_closed_image, limit, &[], None)
}

/// Like [`find_embeddings`], with some images prescribed.
pub fn find_embeddings_from<A: Structure + ?Sized, M: Structure + ?Sized>(
    a: &A,
    m: &M,
    require_closed_image: bool,
    limit: usize,
    fixed: &[(Point, Point)],
) -> Result<Vec<PointMap>> {
    search(a, m, require_closed_image, limit, fixed, None)
}

pub fn is_isomorphic<A: Structure + ?Sized, M: Structure + ?Sized>(a: &A, m: &M) -> Result<bool> {
    if a.pg().universe_size() != m.pg().universe_size() || a.pg().rank() != m.pg().rank() {
        return Ok(false);
    }
    Ok(!find_embeddings(a, m, false, 1)?.is_empty())
}

/// Every closed embedding of `b` restricted to the closed set `a` extends to
/// a closed embedding of `b`.
pub fn has_extension_property<M: Structure + ?Sized>(m: &M, b: &ColouredStructure, a: &Flat) -> Result<bool> {
    let (sub, emb) = super::closed_substructure(b, a)?;
    for f in find_embeddings(&sub, m, true, usize::MAX)? {
        let fixed: Vec<(Point, Point)> = emb.iter().zip(&f).map(|(&x, &y)| (x, y)).collect();
        if find_embeddings_from(b, m, true, 1, &fixed)?.is_empty() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A closed pair `a ⊆ b`, representing one isomorphism type.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub b: ColouredStructure,
    pub a: Flat,
}

fn pair_key(e: &CatalogEntry) -> Vec<u64> {
    let b = &e.b;
    let pg = b.pg();
    let mut key = vec![pg.rank() as u64, e.a.rank() as u64];
    let mut hist = [0u64; 2 * 64];
    for (i, f) in pg.one_dim_flats().iter().enumerate() {
        let c = b.colour_of_flat(crate::pregeometry::FlatId(i as u32)).unwrap_or(0) as usize;
        let inside = e.a.contains(f.points()[f.len() - 1]) as usize;
        hist[inside * 64 + c.min(63)] += 1;
    }
    key.extend_from_slice(&hist);
    for sym in 0..b.vocab().len() {
        let stored = b.rel().stored(sym);
        key.push(stored.len() as u64);
        key.push(stored.iter().filter(|t| t.iter().all(|&p| e.a.contains(p))).count() as u64);
    }
    key
}

/// Isomorphism types of closed pairs `a ⊊ b` with `rank(b) ≤ k`, over all
/// valid coloured structures of the family.
pub fn extension_catalog(
    family: Family,
    vocab: &Vocabulary,
    l: u8,
    sem: Semantics,
    k: u32,
    cap: u128,
) -> Result<Vec<CatalogEntry>> {
    let mut buckets: BTreeMap<Vec<u64>, Vec<CatalogEntry>> = BTreeMap::new();
    let mut total: u128 = 0;
    for rank in 0..=k {
        let pg = std::sync::Arc::new(family.build(rank)?);
        let vocab = std::sync::Arc::new(vocab.clone());
        let all = enumerate_coloured(&pg, &vocab, l, sem, cap)?;
        for b in all {
            for r in 0..rank {
                for a in pg.flats_of_rank(r, cap.min(usize::MAX as u128) as usize)? {
                    total += 1;
                    if total > cap {
                        return Err(Error::cap("catalog pairs", total, cap));
                    }
                    let entry = CatalogEntry { b: b.clone(), a };
                    let bucket = buckets.entry(pair_key(&entry)).or_default();
                    let mut dup = false;
                    for other in bucket.iter() {
                        if pair_isomorphic(&entry, other)? {
                            dup = true;
                            break;
                        }
                    }
                    if !dup {
                        bucket.push(entry);
                    }
                }
            }
        }
    }
    Ok(buckets.into_values().flatten().collect())
}

fn pair_isomorphic(x: &CatalogEntry, y: &CatalogEntry) -> Result<bool> {
    if x.b.pg() != y.b.pg() || x.a.rank() != y.a.rank() {
        return Ok(false);
    }
    let n = x.b.pg().universe_size() as usize;
    let src = (0..n).map(|i| x.a.contains(Point(i as u32))).collect();
    let dst = (0..n).map(|i| y.a.contains(Point(i as u32))).collect();
    Ok(!search(&x.b, &y.b, false, 1, &[], Some((src, dst)))?.is_empty())
}

/// `m` has the extension property for every catalogued pair with
/// `rank(b) ≤ k`.
pub fn k_extension_property<M: Structure + ?Sized>(m: &M, k: u32, catalog: &[CatalogEntry]) -> Result<bool> {
    for e in catalog.iter().filter(|e| e.b.pg().rank() <= k) {
        if !has_extension_property(m, &e.b, &e.a)? {
            return Ok(false);
        }
    }
    Ok(true)
}
