//! Relational structures over a pregeometry and their colourings.

mod embed;
mod enumerate;
mod json;
mod ops;
mod witness;


use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pregeometry::{FlatId, Point, Pregeometry};

pub use embed::{
    extension_catalog, find_embeddings, find_embeddings_from, has_extension_property, is_isomorphic,
    k_extension_property, CatalogEntry, PointMap,
};
pub use enumerate::{admissible_tuples, count_structures, enumerate_coloured, for_each_candidate_tuple};
pub use json::StructureJson;
pub use ops::{closed_substructure, reduct_dim, substitute};
pub use witness::{build_witness_b_strong, witness_generator_count, StrongWitness};

/// Colour count type; colours are `1..=l`, 0 means "none".
pub type Colour = u8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub arity: u32,
}

/// Relation symbols of arity at least 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vocabulary {
    symbols: Vec<Symbol>,
    /// Relations are symmetric and hold only on tuples of distinct entries.
    #[serde(default)]
    symmetric: bool,
}

impl Vocabulary {
    pub fn new(symbols: Vec<Symbol>, symmetric: bool) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::pre("vocabulary must be nonempty"));
        }
        if let Some(s) = symbols.iter().find(|s| s.arity < 2) {
            return Err(Error::pre(format!("symbol {} has arity below 2", s.name)));
        }
        let mut names: Vec<&str> = symbols.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::pre("duplicate symbol names"));
        }
        Ok(Vocabulary { symbols, symmetric })
    }

    /// One symbol `R` of the given arity.
    pub fn single(arity: u32, symmetric: bool) -> Result<Self> {
        Self::new(vec![Symbol { name: "R".into(), arity }], symmetric)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn max_arity(&self) -> u32 {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn arity(&self, sym: usize) -> u32 {
        self.symbols[sym].arity
    }
}

/// How condition (4) reads a related tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColourRule {
    /// The closure of the tuple must contain two differently coloured points.
    #[default]
    Closure,
    /// Two entries of the tuple must have different colours.
    Tuple,
}

impl std::str::FromStr for ColourRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closure" => Ok(ColourRule::Closure),
            "tuple" => Ok(ColourRule::Tuple),
            _ => Err(Error::pre(format!("unknown colour rule {s}"))),
        }
    }
}

impl fmt::Display for ColourRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColourRule::Closure => "closure",
            ColourRule::Tuple => "tuple",
        })
    }
}

/// Which colouring notion is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Semantics {
    pub strong: bool,
    #[serde(default)]
    pub rule: ColourRule,
}

impl Semantics {
    pub const WEAK: Semantics = Semantics { strong: false, rule: ColourRule::Closure };
    pub const STRONG: Semantics = Semantics { strong: true, rule: ColourRule::Closure };

    pub fn new(strong: bool, rule: ColourRule) -> Self {
        Semantics { strong, rule }
    }
}

/// Decides whether a tuple may be related under a colouring.
///
/// `closure_flats` are the rank-1 flats in the closure of the tuple,
/// `entry_flats` those of its entries (points of `closure(∅)` skipped).
pub fn tuple_admissible(
    sem: Semantics,
    colours: &[Colour],
    closure_flats: &[FlatId],
    entry_flats: impl Iterator<Item = FlatId>,
) -> bool {
    if closure_flats.len() < 2 {
        return false;
    }
    if sem.strong {
        let mut seen = 0u64;
        for f in closure_flats {
            let bit = 1u64 << colours[f.idx()];
            if seen & bit != 0 {
                return false;
            }
            seen |= bit;
        }
        return true;
    }
    match sem.rule {
        ColourRule::Closure => {
            let c0 = colours[closure_flats[0].idx()];
            closure_flats.iter().any(|f| colours[f.idx()] != c0)
        }
        ColourRule::Tuple => {
            let mut first = None;
            for f in entry_flats {
                let c = colours[f.idx()];
                match first {
                    None => first = Some(c),
                    Some(c0) if c0 != c => return true,
                    _ => {}
                }
            }
            false
        }
    }
}

/// A pregeometry with interpretations of the relation symbols.
///
/// In symmetric mode each orbit is stored once, as its sorted
/// representative.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelStructure {
    pg: Arc<Pregeometry>,
    vocab: Arc<Vocabulary>,
    rels: Vec<BTreeSet<Vec<Point>>>,
}

impl RelStructure {
    pub fn empty(pg: Arc<Pregeometry>, vocab: Arc<Vocabulary>) -> Self {
        let rels = vec![BTreeSet::new(); vocab.len()];
        RelStructure { pg, vocab, rels }
    }

    pub fn pg(&self) -> &Pregeometry {
        &self.pg
    }

    pub fn pg_arc(&self) -> &Arc<Pregeometry> {
        &self.pg
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_arc(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    /// Adds a tuple (any orbit member in symmetric mode).
    pub fn insert(&mut self, sym: usize, tuple: &[Point]) -> Result<()> {
        let arity = self.vocab.arity(sym) as usize;
        if tuple.len() != arity {
            return Err(Error::pre(format!("tuple of length {} for arity {arity}", tuple.len())));
        }
        for &p in tuple {
            self.pg.check(p)?;
        }
        let mut t = tuple.to_vec();
        if self.vocab.symmetric {
            t.sort_unstable();
            if t.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::pre("symmetric relations hold only on distinct entries"));
            }
        }
        self.rels[sym].insert(t);
        Ok(())
    }

    pub(crate) fn insert_rep(&mut self, sym: usize, rep: Vec<Point>) {
        self.rels[sym].insert(rep);
    }

    pub fn clear_symbol(&mut self, sym: usize) {
        self.rels[sym].clear();
    }

    #[inline]
    pub fn holds(&self, sym: usize, tuple: &[Point]) -> bool {
        if self.vocab.symmetric {
            let mut t = tuple.to_vec();
            t.sort_unstable();
            if t.windows(2).any(|w| w[0] == w[1]) {
                return false;
            }
            self.rels[sym].contains(&t)
        } else {
            self.rels[sym].contains(tuple)
        }
    }

    /// Stored tuples: all tuples in ordered mode, orbit representatives in
    /// symmetric mode.
    pub fn stored(&self, sym: usize) -> &BTreeSet<Vec<Point>> {
        &self.rels[sym]
    }

    /// Every tuple of the interpretation (orbits expanded).
    pub fn tuples(&self, sym: usize) -> Vec<Vec<Point>> {
        if !self.vocab.symmetric {
            return self.rels[sym].iter().cloned().collect();
        }
        let mut out = Vec::new();
        for rep in &self.rels[sym] {
            permutations(rep, &mut out);
        }
        out.sort();
        out
    }

    pub fn relation_count(&self) -> usize {
        self.rels.iter().map(|r| r.len()).sum()
    }

    pub fn is_relation_free(&self) -> bool {
        self.rels.iter().all(|r| r.is_empty())
    }

    pub(crate) fn rels_mut(&mut self) -> &mut Vec<BTreeSet<Vec<Point>>> {
        &mut self.rels
    }
}

pub(crate) fn permutations(rep: &[Point], out: &mut Vec<Vec<Point>>) {
    let mut v = rep.to_vec();
    v.sort_unstable();
    loop {
        out.push(v.clone());
        // next lexicographic permutation
        let n = v.len();
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| v[i] < v[i + 1]) else {
            return;
        };
        let j = (i + 1..n).rev().find(|&j| v[j] > v[i]).expect("successor");
        v.swap(i, j);
        v[i + 1..].reverse();
    }
}

/// An L-structure: relations plus a colour for each rank-1 flat.
///
/// `colours` is `None` for the 0-dimensional reduct, where the colour
/// symbols are not interpreted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColouredStructure {
    rel: RelStructure,
    l: Colour,
    colours: Option<Vec<Colour>>,
}

impl ColouredStructure {
    pub fn new(rel: RelStructure, l: Colour, colours: Vec<Colour>) -> Result<Self> {
        if l < 1 {
            return Err(Error::pre("colour count must be positive"));
        }
        if colours.len() != rel.pg().num_flats1() {
            return Err(Error::pre(format!(
                "colouring covers {} flats, pregeometry has {}",
                colours.len(),
                rel.pg().num_flats1()
            )));
        }
        Ok(ColouredStructure { rel, l, colours: Some(colours) })
    }

    /// A structure whose colour symbols are uninterpreted.
    pub fn uncoloured(rel: RelStructure, l: Colour) -> Self {
        ColouredStructure { rel, l, colours: None }
    }

    pub fn rel(&self) -> &RelStructure {
        &self.rel
    }

    pub fn rel_mut(&mut self) -> &mut RelStructure {
        &mut self.rel
    }

    pub fn pg(&self) -> &Pregeometry {
        self.rel.pg()
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.rel.vocab()
    }

    pub fn l(&self) -> Colour {
        self.l
    }

    pub fn colours(&self) -> Option<&[Colour]> {
        self.colours.as_deref()
    }

    pub fn colour_of_flat(&self, f: FlatId) -> Option<Colour> {
        self.colours.as_ref().map(|c| c[f.idx()])
    }

    pub fn colour_of(&self, p: Point) -> Option<Colour> {
        let f = self.pg().flat_of(p)?;
        self.colour_of_flat(f)
    }

    pub fn forget_colours(&self) -> RelStructure {
        self.rel.clone()
    }

    pub fn into_rel(self) -> RelStructure {
        self.rel
    }

    pub fn holds(&self, sym: usize, tuple: &[Point]) -> bool {
        self.rel.holds(sym, tuple)
    }
}

/// Read access shared by relational and coloured structures.
pub trait Structure: Sync {
    fn rel(&self) -> &RelStructure;

    /// Colour of the flat containing `p`, when colours are interpreted.
    fn colour_at(&self, p: Point) -> Option<Colour>;

    fn has_colours(&self) -> bool;

    /// Number of colour symbols, 0 when colours are not interpreted.
    fn colour_count(&self) -> Colour {
        0
    }

    fn pg(&self) -> &Pregeometry {
        self.rel().pg()
    }

    fn vocab(&self) -> &Vocabulary {
        self.rel().vocab()
    }
}

impl Structure for RelStructure {
    fn rel(&self) -> &RelStructure {
        self
    }

    fn colour_at(&self, _p: Point) -> Option<Colour> {
        None
    }

    fn has_colours(&self) -> bool {
        false
    }
}

impl Structure for ColouredStructure {
    fn rel(&self) -> &RelStructure {
        &self.rel
    }

    fn colour_at(&self, p: Point) -> Option<Colour> {
        self.colour_of(p)
    }

    fn has_colours(&self) -> bool {
        self.colours.is_some()
    }

    fn colour_count(&self) -> Colour {
        if self.colours.is_some() {
            self.l
        } else {
            0
        }
    }
}

/// A failed colouring condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Condition number, 1 to 5.
    pub condition: u8,
    pub symbol: Option<String>,
    pub points: Vec<Point>,
    pub note: String,
}

/// Checks the colouring conditions. The result is empty iff `m` is
/// (strongly) l-coloured.
pub fn validate(m: &ColouredStructure, sem: Semantics) -> Vec<Violation> {
    let mut out = Vec::new();
    let pg = m.pg();
    if let Some(cols) = m.colours() {
        for (i, &c) in cols.iter().enumerate() {
            if c == 0 || c > m.l {
                out.push(Violation {
                    condition: 1,
                    symbol: None,
                    points: pg.flat1(FlatId(i as u32)).points().to_vec(),
                    note: format!("flat {i} has colour {c}, expected 1..={}", m.l),
                });
            }
        }
    }
    let mut flats = Vec::new();
    for (sym, s) in m.vocab().symbols().iter().enumerate() {
        for t in m.rel.stored(sym) {
            if t.iter().all(|&p| pg.in_closure_of_empty(p)) {
                out.push(Violation {
                    condition: 2,
                    symbol: Some(s.name.clone()),
                    points: t.clone(),
                    note: "related tuple inside closure of the empty set".into(),
                });
                continue;
            }
            let Some(cols) = m.colours() else {
                continue;
            };
            if cols.iter().any(|&c| c == 0 || c > m.l) {
                continue;
            }
            pg.flats_in_closure_into(t, &mut flats);
            let weak_ok = match sem.rule {
                ColourRule::Closure => {
                    flats.iter().any(|f| cols[f.idx()] != cols[flats[0].idx()])
                }
                ColourRule::Tuple => {
                    let ec: Vec<Colour> =
                        t.iter().filter_map(|&p| pg.flat_of(p)).map(|f| cols[f.idx()]).collect();
                    ec.iter().any(|&c| c != ec[0])
                }
            };
            if !weak_ok {
                out.push(Violation {
                    condition: 4,
                    symbol: Some(s.name.clone()),
                    points: t.clone(),
                    note: match sem.rule {
                        ColourRule::Closure => "closure of related tuple is monochromatic".into(),
                        ColourRule::Tuple => "entries of related tuple share one colour".into(),
                    },
                });
            }
            if sem.strong {
                'pairs: for (i, f) in flats.iter().enumerate() {
                    for g in &flats[i + 1..] {
                        if cols[f.idx()] == cols[g.idx()] {
                            out.push(Violation {
                                condition: 5,
                                symbol: Some(s.name.clone()),
                                points: t.clone(),
                                note: format!(
                                    "independent points {} and {} in the closure share colour {}",
                                    pg.flat1(*f).points().iter().find(|p| !pg.in_closure_of_empty(**p)).unwrap(),
                                    pg.flat1(*g).points().iter().find(|p| !pg.in_closure_of_empty(**p)).unwrap(),
                                    cols[f.idx()]
                                ),
                            });
                            break 'pairs;
                        }
                    }
                }
            }
        }
    }
    out
}

/// True iff `gamma` (indexed by rank-1 flat) is an l-colouring of `s`.
///
/// Decided through the colouring constraints rather than [`validate`], so
/// the two serve as cross-checks of each other.
pub fn validate_colouring_fn(s: &RelStructure, gamma: &[Colour], l: Colour, sem: Semantics) -> Result<bool> {
    if gamma.len() != s.pg().num_flats1() {
        return Err(Error::pre(format!(
            "colouring covers {} flats, pregeometry has {}",
            gamma.len(),
            s.pg().num_flats1()
        )));
    }
    if gamma.iter().any(|&c| c == 0 || c > l) {
        return Ok(false);
    }
    let csp = crate::colouring::build_csp(s, l, sem);
    Ok(csp.is_satisfied_by(gamma))
}
