//! Finite pregeometries: the trivial one, and linear, affine and projective
//! spaces over prime fields.
//!
//! `rank` is always the matroid rank. The affine space on `q^n` points has
//! rank `n + 1`, the projective space of projective dimension `n` has rank
//! `n + 1`. Points of the field kinds are lifted into a vector space
//! (affine points `x ↦ (x, 1)`, projective points as normalized vectors) and
//! closure is the set of points whose lift lies in the span of the lifts.

mod gf;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use gf::Field;

pub(crate) use gf::MAX_DIM;

/// Largest lifted vector table we are willing to materialize.
pub const MAX_TABLE: u64 = 1 << 22;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub u32);

impl Point {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index into [`Pregeometry::one_dim_flats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlatId(pub u32);

impl FlatId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Trivial,
    Linear,
    Affine,
    Projective,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Trivial => "trivial",
            Kind::Linear => "linear",
            Kind::Affine => "affine",
            Kind::Projective => "projective",
        };
        f.write_str(s)
    }
}

/// A family of pregeometries, indexed by rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Family {
    pub kind: Kind,
    /// Field order; ignored for `Trivial`.
    #[serde(default)]
    pub q: u32,
}

impl Family {
    pub fn new(kind: Kind, q: u32) -> Self {
        Family { kind, q }
    }

    pub fn linear(q: u32) -> Self {
        Family::new(Kind::Linear, q)
    }

    pub fn build(&self, rank: u32) -> Result<Pregeometry> {
        Pregeometry::new(self.kind, self.q, rank)
    }

    /// Number of rank-1 flats inside a rank-`d` flat; nondecreasing in `d`.
    pub fn flats_in_rank(&self, d: u32) -> u128 {
        let q = self.q as u128;
        match self.kind {
            Kind::Trivial => d as u128,
            Kind::Linear | Kind::Projective => (q.pow(d) - 1) / (q - 1),
            Kind::Affine => {
                if d == 0 {
                    0
                } else {
                    q.pow(d - 1)
                }
            }
        }
    }

    /// The table `d ↦ flats_in_rank(d)` and the largest `d` whose entry is at
    /// most `l`. The table runs one step past that `d`.
    pub fn threshold(&self, l: u32) -> Result<Threshold> {
        if l < 2 {
            return Err(Error::pre("colour count must be at least 2"));
        }
        let mut table = Vec::new();
        let mut d = 0u32;
        loop {
            let v = self.flats_in_rank(d);
            table.push(v);
            if v > l as u128 {
                break;
            }
            d += 1;
        }
        Ok(Threshold { t: d - 1, table })
    }

    /// `flats_in_rank(l + 1) * l`: the extension depth used for the strong case.
    pub fn k0(&self, l: u32) -> u128 {
        self.flats_in_rank(l + 1) * l as u128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threshold {
    pub t: u32,
    pub table: Vec<u128>,
}

/// A closed set together with its canonical basis.
///
/// For field kinds the basis is the reduced echelon basis of the lifted span,
/// for the trivial kind it is the sorted point list. Equality is decided by
/// the basis alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Flat {
    basis: Vec<u64>,
    rank: u32,
    points: Vec<Point>,
}

impl PartialEq for Flat {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
    }
}

impl Eq for Flat {}

impl std::hash::Hash for Flat {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.basis.hash(state);
    }
}

impl Flat {
    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    /// Members in ascending order.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.binary_search(&p).is_ok()
    }

    pub fn is_subset_of(&self, other: &Flat) -> bool {
        self.points.iter().all(|&p| other.contains(p))
    }
}

/// A finite pregeometry with precomputed rank-1 flats.
#[derive(Debug, Clone)]
pub struct Pregeometry {
    kind: Kind,
    q: u32,
    rank: u32,
    field: Option<Field>,
    lifts: Vec<u64>,
    lookup: Vec<u32>,
    closure_empty: Vec<Point>,
    flats1: Vec<Flat>,
    flat_of_point: Vec<u32>,
}

impl PartialEq for Pregeometry {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.q == other.q && self.rank == other.rank
    }
}

impl Eq for Pregeometry {}

impl std::hash::Hash for Pregeometry {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        (self.kind, self.q, self.rank).hash(h);
    }
}

fn is_prime(q: u32) -> bool {
    q >= 2 && (2..q).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

impl Pregeometry {
    /// Builds the pregeometry of the given kind and matroid rank.
    ///
    /// For `Affine`, `rank` must be at least 1 and the point set is
    /// `GF(q)^(rank-1)`.
    pub fn new(kind: Kind, q: u32, rank: u32) -> Result<Self> {
        if kind != Kind::Trivial && !is_prime(q) {
            return Err(Error::pre(format!("field order {q} is not prime")));
        }
        let dim = match kind {
            Kind::Trivial => 0,
            Kind::Linear | Kind::Projective => rank,
            Kind::Affine => {
                if rank == 0 {
                    // The empty affine space.
                    0
                } else {
                    rank
                }
            }
        };
        if dim as usize > MAX_DIM {
            return Err(Error::cap("lifted dimension", dim as u128, MAX_DIM as u128));
        }
        let q = if kind == Kind::Trivial { 0 } else { q };
        let mut pg = Pregeometry {
            kind,
            q,
            rank,
            field: None,
            lifts: Vec::new(),
            lookup: Vec::new(),
            closure_empty: Vec::new(),
            flats1: Vec::new(),
            flat_of_point: Vec::new(),
        };
        match kind {
            Kind::Trivial => {
                if rank as u64 > MAX_TABLE {
                    return Err(Error::cap("universe", rank as u128, MAX_TABLE as u128));
                }
                pg.lifts = (0..rank as u64).collect();
            }
            _ => {
                let field = Field::new(q, dim);
                let size = (q as u128).pow(dim);
                if size > MAX_TABLE as u128 {
                    return Err(Error::cap("lifted vector table", size, MAX_TABLE as u128));
                }
                let mut lookup = vec![NONE; size as usize];
                let mut lifts = Vec::new();
                match kind {
                    Kind::Linear => {
                        for v in 0..size as u64 {
                            lookup[v as usize] = v as u32;
                            lifts.push(v);
                        }
                    }
                    Kind::Affine => {
                        if rank > 0 {
                            let top = field.pow(dim - 1);
                            for x in 0..top {
                                lookup[(x + top) as usize] = x as u32;
                                lifts.push(x + top);
                            }
                        }
                    }
                    Kind::Projective => {
                        for v in 1..size as u64 {
                            if field.normalize_lead(v) == v {
                                lookup[v as usize] = lifts.len() as u32;
                                lifts.push(v);
                            }
                        }
                        for v in 1..size as u64 {
                            let n = field.normalize_lead(v);
                            lookup[v as usize] = lookup[n as usize];
                        }
                    }
                    Kind::Trivial => unreachable!(),
                }
                pg.field = Some(field);
                pg.lifts = lifts;
                pg.lookup = lookup;
            }
        }
        pg.closure_empty = pg.closure_unchecked(&[]).points;
        pg.build_flats1();
        Ok(pg)
    }

    fn build_flats1(&mut self) {
        let n = self.universe_size() as usize;
        let mut flat_of_point = vec![NONE; n];
        let mut flats = Vec::new();
        for p in 0..n {
            if flat_of_point[p] != NONE || self.closure_empty.binary_search(&Point(p as u32)).is_ok() {
                continue;
            }
            let f = self.closure_unchecked(&[Point(p as u32)]);
            for &x in &f.points {
                if self.closure_empty.binary_search(&x).is_err() {
                    flat_of_point[x.idx()] = flats.len() as u32;
                }
            }
            flats.push(f);
        }
        self.flats1 = flats;
        self.flat_of_point = flat_of_point;
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Field order, 0 for the trivial kind.
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn family(&self) -> Family {
        Family::new(self.kind, self.q)
    }

    pub fn universe_size(&self) -> u32 {
        self.lifts.len() as u32
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.universe_size()).map(Point)
    }

    pub fn closure_of_empty(&self) -> &[Point] {
        &self.closure_empty
    }

    pub fn in_closure_of_empty(&self, p: Point) -> bool {
        self.closure_empty.binary_search(&p).is_ok()
    }

    /// Rank-1 flats, ordered by their least point.
    pub fn one_dim_flats(&self) -> &[Flat] {
        &self.flats1
    }

    pub fn num_flats1(&self) -> usize {
        self.flats1.len()
    }

    pub fn flat1(&self, id: FlatId) -> &Flat {
        &self.flats1[id.idx()]
    }

    /// The rank-1 flat containing `p`, or `None` for points of `closure(∅)`.
    #[inline]
    pub fn flat_of(&self, p: Point) -> Option<FlatId> {
        match self.flat_of_point[p.idx()] {
            NONE => None,
            i => Some(FlatId(i)),
        }
    }

    pub fn check(&self, p: Point) -> Result<()> {
        if p.0 < self.universe_size() {
            Ok(())
        } else {
            Err(Error::PointOutOfRange { point: p.0, universe: self.universe_size() })
        }
    }

    fn check_all(&self, s: &[Point]) -> Result<()> {
        s.iter().try_for_each(|&p| self.check(p))
    }

    /// Coordinates of a point's lifted vector, lowest coordinate first.
    /// Empty for the trivial kind.
    pub fn coordinates(&self, p: Point) -> Vec<u8> {
        match &self.field {
            Some(f) => f.digits(self.lifts[p.idx()]),
            None => Vec::new(),
        }
    }

    /// Digit string of a point, most significant coordinate first, e.g. `011`.
    /// Affine points print without the lifting coordinate.
    pub fn format_point(&self, p: Point) -> String {
        let mut d = self.coordinates(p);
        if self.kind == Kind::Affine {
            d.pop();
        }
        if d.is_empty() {
            return p.0.to_string();
        }
        d.iter().rev().map(|x| char::from_digit(*x as u32, 36).unwrap_or('?')).collect()
    }

    /// Inverse of [`format_point`](Self::format_point) for field kinds.
    pub fn parse_point(&self, s: &str) -> Result<Point> {
        let Some(field) = &self.field else {
            return s
                .parse::<u32>()
                .map_err(|e| Error::pre(e.to_string()))
                .and_then(|i| self.check(Point(i)).map(|_| Point(i)));
        };
        let mut digits: Vec<u8> = s
            .chars()
            .rev()
            .map(|c| c.to_digit(36).filter(|&d| d < self.q).map(|d| d as u8))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::pre(format!("bad point literal {s}")))?;
        if self.kind == Kind::Affine {
            digits.push(1);
        }
        if digits.len() != field.dim() as usize {
            return Err(Error::pre(format!("point literal {s} has wrong length")));
        }
        let code = field.encode(&digits);
        let code = if self.kind == Kind::Projective { field.normalize_lead(code) } else { code };
        match self.lookup.get(code as usize) {
            Some(&i) if i != NONE => Ok(Point(i)),
            _ => Err(Error::pre(format!("{s} is not a point"))),
        }
    }

    /// Reduced echelon basis of the lifted span (field kinds) or the sorted
    /// distinct points (trivial kind).
    pub(crate) fn basis_of(&self, s: &[Point]) -> Vec<u64> {
        match &self.field {
            Some(f) => {
                let mut b = Vec::new();
                for &p in s {
                    f.insert(&mut b, self.lifts[p.idx()]);
                }
                b
            }
            None => {
                let mut b: Vec<u64> = s.iter().map(|p| p.0 as u64).collect();
                b.sort_unstable();
                b.dedup();
                b
            }
        }
    }

    /// Extends a canonical basis by one point.
    pub(crate) fn basis_with(&self, basis: &[u64], p: Point) -> Vec<u64> {
        let mut b = basis.to_vec();
        match &self.field {
            Some(f) => {
                f.insert(&mut b, self.lifts[p.idx()]);
            }
            None => {
                if let Err(at) = b.binary_search(&(p.0 as u64)) {
                    b.insert(at, p.0 as u64);
                }
            }
        }
        b
    }

    /// Points of the closed set with the given canonical basis.
    pub(crate) fn members(&self, basis: &[u64]) -> Vec<Point> {
        match &self.field {
            Some(f) => {
                let mut out = Vec::new();
                f.for_each_in_span(basis, |v| {
                    let p = self.lookup[v as usize];
                    if p != NONE {
                        out.push(Point(p));
                    }
                });
                out.sort_unstable();
                out.dedup();
                out
            }
            None => basis.iter().map(|&x| Point(x as u32)).collect(),
        }
    }


    pub(crate) fn flat_from_basis(&self, basis: Vec<u64>) -> Flat {
        let points = self.members(&basis);
        Flat { rank: basis.len() as u32, basis, points }
    }

    pub(crate) fn closure_unchecked(&self, s: &[Point]) -> Flat {
        self.flat_from_basis(self.basis_of(s))
    }

    /// Smallest closed superset of `s`.
    pub fn closure(&self, s: &[Point]) -> Result<Flat> {
        self.check_all(s)?;
        Ok(self.closure_unchecked(s))
    }

    pub fn rank_of(&self, s: &[Point]) -> Result<u32> {
        self.check_all(s)?;
        Ok(self.rank_unchecked(s))
    }

    #[inline]
    pub(crate) fn rank_unchecked(&self, s: &[Point]) -> u32 {
        match &self.field {
            Some(f) => {
                let mut b = Vec::with_capacity(s.len());
                for &p in s {
                    f.insert(&mut b, self.lifts[p.idx()]);
                }
                b.len() as u32
            }
            None => {
                let mut v: Vec<u32> = s.iter().map(|p| p.0).collect();
                v.sort_unstable();
                v.dedup();
                v.len() as u32
            }
        }
    }

    /// True iff `s` has no repeated points, misses `closure(∅)` and its rank
    /// equals its size.
    pub fn is_independent(&self, s: &[Point]) -> Result<bool> {
        self.check_all(s)?;
        let mut v = s.to_vec();
        v.sort_unstable();
        v.dedup();
        if v.len() != s.len() {
            return Ok(false);
        }
        Ok(self.rank_unchecked(s) as usize == s.len())
    }

    /// `b ∈ closure(args)`; with no arguments, `b ∈ closure(∅)`.
    pub fn theta(&self, args: &[Point], b: Point) -> Result<bool> {
        self.check_all(args)?;
        self.check(b)?;
        Ok(self.theta_unchecked(args, b))
    }

    #[inline]
    pub(crate) fn theta_unchecked(&self, args: &[Point], b: Point) -> bool {
        match &self.field {
            Some(f) => {
                let mut basis = Vec::with_capacity(args.len());
                for &p in args {
                    f.insert(&mut basis, self.lifts[p.idx()]);
                }
                f.reduce(&basis, self.lifts[b.idx()]) == 0
            }
            None => args.contains(&b),
        }
    }

    /// Sorted rank-1 flats inside `closure(s)`.
    pub fn flats_in_closure(&self, s: &[Point]) -> Vec<FlatId> {
        let mut out = Vec::new();
        self.flats_in_closure_into(s, &mut out);
        out
    }

    pub(crate) fn flats_in_closure_into(&self, s: &[Point], out: &mut Vec<FlatId>) {
        out.clear();
        match &self.field {
            Some(f) => {
                let mut basis = Vec::with_capacity(s.len());
                for &p in s {
                    f.insert(&mut basis, self.lifts[p.idx()]);
                }
                f.for_each_in_span(&basis, |v| {
                    let p = self.lookup[v as usize];
                    if p != NONE {
                        let id = self.flat_of_point[p as usize];
                        if id != NONE {
                            out.push(FlatId(id));
                        }
                    }
                });
                out.sort_unstable();
                out.dedup();
            }
            None => {
                out.extend(s.iter().map(|p| FlatId(self.flat_of_point[p.idx()])));
                out.sort_unstable();
                out.dedup();
            }
        }
    }

    /// Number of rank-1 flats contained in `f`.
    pub fn d_count(&self, f: &Flat) -> usize {
        let mut ids: Vec<u32> = f
            .points
            .iter()
            .map(|p| self.flat_of_point[p.idx()])
            .filter(|&i| i != NONE)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// The whole universe as a flat.
    pub fn top(&self) -> Flat {
        let all: Vec<Point> = self.points().collect();
        self.closure_unchecked(&all)
    }

    /// Every flat of rank `k`, each once, ordered by member list.
    pub fn flats_of_rank(&self, k: u32, cap: usize) -> Result<Vec<Flat>> {
        if k > self.rank {
            return Ok(Vec::new());
        }
        if self.kind == Kind::Trivial {
            let n = self.universe_size() as u128;
            let count = binomial(n, k as u128);
            if count > cap as u128 {
                return Err(Error::cap("flats", count, cap as u128));
            }
            let mut out = Vec::new();
            let mut idx: Vec<u32> = (0..k).collect();
            loop {
                let pts: Vec<Point> = idx.iter().map(|&i| Point(i)).collect();
                out.push(self.closure_unchecked(&pts));
                // next combination
                let mut i = k as usize;
                loop {
                    if i == 0 {
                        return Ok(out);
                    }
                    i -= 1;
                    if idx[i] < (n as u32) - (k - i as u32) {
                        idx[i] += 1;
                        for j in i + 1..k as usize {
                            idx[j] = idx[j - 1] + 1;
                        }
                        break;
                    }
                }
                if k == 0 {
                    return Ok(out);
                }
            }
        }
        let mut level: Vec<Flat> = vec![self.closure_unchecked(&[])];
        for _ in 0..k {
            let mut seen: HashSet<Vec<u64>> = HashSet::new();
            let mut next = Vec::new();
            for f in &level {
                for p in self.points() {
                    if f.contains(p) {
                        continue;
                    }
                    let b = self.basis_with(&f.basis, p);
                    if seen.insert(b.clone()) {
                        if next.len() >= cap {
                            return Err(Error::cap("flats", next.len() as u128 + 1, cap as u128));
                        }
                        next.push(self.flat_from_basis(b));
                    }
                }
            }
            level = next;
        }
        level.sort_by(|a, b| a.points.cmp(&b.points));
        Ok(level)
    }

    /// Extends `src_i ↦ dst_i` to the closure-preserving bijection between
    /// `closure(src)` and `closure(dst)` that is linear in the lifted
    /// coordinates.
    pub fn extend_independent_iso(
        &self,
        src: &[Point],
        dst_pg: &Pregeometry,
        dst: &[Point],
    ) -> Result<BTreeMap<Point, Point>> {
        if self.kind != dst_pg.kind || self.q != dst_pg.q {
            return Err(Error::pre("source and target differ in kind or field"));
        }
        if src.len() != dst.len() {
            return Err(Error::pre("tuples differ in length"));
        }
        if !self.is_independent(src)? || !dst_pg.is_independent(dst)? {
            return Err(Error::pre("tuples must be independent"));
        }
        let mut map = BTreeMap::new();
        let Some(f) = &self.field else {
            for (&a, &b) in src.iter().zip(dst) {
                map.insert(a, b);
            }
            return Ok(map);
        };
        let g = dst_pg.field.as_ref().expect("same kind");
        let k = src.len();
        let q = self.q as u8;
        let mut coeff = vec![0u8; k];
        loop {
            let mut u = 0u64;
            let mut v = 0u64;
            for i in 0..k {
                u = f.axpy(coeff[i], self.lifts[src[i].idx()], u);
                v = g.axpy(coeff[i], dst_pg.lifts[dst[i].idx()], v);
            }
            let a = self.lookup[u as usize];
            if a != NONE {
                let b = dst_pg.lookup[v as usize];
                debug_assert_ne!(b, NONE);
                map.insert(Point(a), Point(b));
            }
            let mut i = 0;
            loop {
                if i == k {
                    return Ok(map);
                }
                coeff[i] += 1;
                if coeff[i] == q {
                    coeff[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    /// A basis of `f` chosen greedily in ascending point order.
    pub fn greedy_basis(&self, pts: &[Point]) -> Vec<Point> {
        let mut chosen = Vec::new();
        let mut r = 0;
        for &p in pts {
            chosen.push(p);
            let r2 = self.rank_unchecked(&chosen);
            if r2 == r {
                chosen.pop();
            } else {
                r = r2;
            }
        }
        chosen
    }
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}
