//! Native evaluators for the same-colour formulas.

use std::sync::Arc;

use super::{NativeRelation, PreparedRelation};
use crate::error::Result;
use crate::pregeometry::{Point, Pregeometry};
use crate::structures::{find_embeddings_from, Colour, RelStructure, Structure};

/// Square bit matrix over the universe.
#[derive(Debug, Clone)]
struct BitMatrix {
    n: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitMatrix { n, words, data: vec![0; n * words] }
    }

    fn set(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] |= 1 << (c % 64);
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }
}

fn closure_rows(pg: &Pregeometry) -> BitMatrix {
    let n = pg.universe_size() as usize;
    let mut cl = BitMatrix::new(n);
    for p in pg.points() {
        for &q in pg.closure_unchecked(&[p]).points() {
            cl.set(p.idx(), q.idx());
        }
    }
    cl
}

/// Precomputed adjacency for the strong-case same-colour formula on one
/// structure.
///
/// `link[u]` holds the `v` with some related tuple `(u, v, ...)` of the
/// chosen symbol and `v ∉ closure(u)`; `back[v]` holds the `u` with a
/// related tuple `(u, v, ...)` and `u ∉ closure(v)`.
#[derive(Debug, Clone)]
pub struct XiStrongIndex {
    l: Colour,
    cl: BitMatrix,
    link: BitMatrix,
    back: BitMatrix,
}

impl XiStrongIndex {
    pub fn new(m: &dyn Structure, sym: usize, l: Colour) -> Self {
        let pg = m.pg();
        let n = pg.universe_size() as usize;
        let cl = closure_rows(pg);
        let mut pairs = BitMatrix::new(n);
        let symmetric = m.vocab().symmetric();
        for t in m.rel().stored(sym) {
            if symmetric {
                for (i, &u) in t.iter().enumerate() {
                    for (j, &v) in t.iter().enumerate() {
                        if i != j {
                            pairs.set(u.idx(), v.idx());
                        }
                    }
                }
            } else {
                pairs.set(t[0].idx(), t[1].idx());
            }
        }
        let mut link = BitMatrix::new(n);
        let mut back = BitMatrix::new(n);
        for u in 0..n {
            for v in 0..n {
                if pairs.get(u, v) {
                    if !cl.get(u, v) {
                        link.set(u, v);
                    }
                    if !cl.get(v, u) {
                        back.set(v, u);
                    }
                }
            }
        }
        XiStrongIndex { l, cl, link, back }
    }

    pub fn holds(&self, a: Point, b: Point) -> bool {
        let (a, b) = (a.idx(), b.idx());
        if self.cl.get(b, a) || self.cl.get(a, b) {
            return true;
        }
        let common: Vec<u64> = self.link.row(a).iter().zip(self.link.row(b)).map(|(x, y)| x & y).collect();
        let need = self.l as usize - 1;
        self.extend(&common, need)
    }

    /// Picks `need` witnesses in turn from `cand`, each later one related
    /// back to every earlier one.
    fn extend(&self, cand: &[u64], need: usize) -> bool {
        if need == 0 {
            return true;
        }
        for (w, &word) in cand.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let v = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let next: Vec<u64> = cand.iter().zip(self.back.row(v)).map(|(x, y)| x & y).collect();
                if self.extend(&next, need - 1) {
                    return true;
                }
            }
        }
        false
    }

    pub fn universe(&self) -> usize {
        self.cl.n
    }
}

/// The strong-case formula evaluated through [`XiStrongIndex`].
pub fn xi_strong_holds(m: &dyn Structure, sym: usize, l: Colour, a: Point, b: Point) -> bool {
    XiStrongIndex::new(m, sym, l).holds(a, b)
}

/// Native backing for the strong-case same-colour relation.
#[derive(Debug, Clone, Copy)]
pub struct XiStrongNative {
    pub sym: usize,
    pub l: Colour,
}

impl PreparedRelation for XiStrongIndex {
    fn holds(&self, args: &[Point]) -> bool {
        XiStrongIndex::holds(self, args[0], args[1])
    }
}

impl NativeRelation for XiStrongNative {
    fn arity(&self) -> usize {
        2
    }

    fn prepare<'m>(&self, m: &'m dyn Structure) -> Result<Box<dyn PreparedRelation + 'm>> {
        Ok(Box::new(XiStrongIndex::new(m, self.sym, self.l)))
    }
}

/// Native backing for the weak-case relations, decided by embedding search:
/// `xi0(x, y)` holds iff some embedding of `b` sends `b1, b2` to `x, y`, and
/// `xi(x, y)` iff `x ∈ closure(y)` or both `xi0(x, z)` and `xi0(y, z)` for
/// some `z`.
#[derive(Debug, Clone)]
pub struct WeakXiNative {
    pub b: Arc<RelStructure>,
    pub b1: Point,
    pub b2: Point,
    /// Decide `xi` rather than `xi0`.
    pub full: bool,
}

struct WeakXiTable {
    full: bool,
    cl: BitMatrix,
    xi0: BitMatrix,
}

impl PreparedRelation for WeakXiTable {
    fn holds(&self, args: &[Point]) -> bool {
        let (x, y) = (args[0].idx(), args[1].idx());
        if !self.full {
            return self.xi0.get(x, y);
        }
        self.cl.get(y, x) || self.xi0.row(x).iter().zip(self.xi0.row(y)).any(|(a, b)| a & b != 0)
    }
}

impl NativeRelation for WeakXiNative {
    fn arity(&self) -> usize {
        2
    }

    fn prepare<'m>(&self, m: &'m dyn Structure) -> Result<Box<dyn PreparedRelation + 'm>> {
        let pg = m.pg();
        let n = pg.universe_size() as usize;
        let mut xi0 = BitMatrix::new(n);
        for x in pg.points() {
            for y in pg.points() {
                if !find_embeddings_from(&*self.b, m, false, 1, &[(self.b1, x), (self.b2, y)])?.is_empty() {
                    xi0.set(x.idx(), y.idx());
                }
            }
        }
        Ok(Box::new(WeakXiTable { full: self.full, cl: closure_rows(pg), xi0 }))
    }
}
