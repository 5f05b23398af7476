//! Chronological backtracking with forward checking over colour domains
//! stored as bitmasks.

use super::{ColourCsp, ConstraintKind, Count};
use crate::pregeometry::FlatId;
use crate::structures::Colour;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Found(Vec<Colour>),
    Unsat,
    /// Node budget exhausted.
    Unknown,
}

enum Undo {
    Dom(u32, u64),
    Val(u32),
}

struct Stop;

pub struct Solver {
    n: usize,
    nae: Vec<Vec<u32>>,
    var_nae: Vec<Vec<u32>>,
    neigh: Vec<Vec<u32>>,
    degree: Vec<u32>,
    fixed: Vec<(u32, Colour)>,
    dead: bool,
    dom: Vec<u64>,
    val: Vec<Colour>,
    trail: Vec<Undo>,
    nodes: u64,
    max_nodes: u64,
}

impl Solver {
    /// `fixed` pins flats to colours, `separate` adds pairwise
    /// all-different constraints.
    pub fn new(csp: &ColourCsp, fixed: &[(FlatId, Colour)], separate: &[(FlatId, FlatId)]) -> Self {
        let n = csp.vars;
        let mut nae = Vec::new();
        let mut var_nae = vec![Vec::new(); n];
        let mut neigh: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut degree = vec![0u32; n];
        for c in &csp.constraints {
            for f in &c.flats {
                degree[f.idx()] += 1;
            }
            match c.kind {
                ConstraintKind::NotAllEqual => {
                    let id = nae.len() as u32;
                    for f in &c.flats {
                        var_nae[f.idx()].push(id);
                    }
                    nae.push(c.flats.iter().map(|f| f.0).collect());
                }
                ConstraintKind::AllDifferent => {
                    for f in &c.flats {
                        for g in &c.flats {
                            if f != g {
                                neigh[f.idx()].push(g.0);
                            }
                        }
                    }
                }
            }
        }
        for &(a, b) in separate {
            degree[a.idx()] += 1;
            degree[b.idx()] += 1;
            neigh[a.idx()].push(b.0);
            neigh[b.idx()].push(a.0);
        }
        for v in &mut neigh {
            v.sort_unstable();
            v.dedup();
        }
        let full: u64 = ((1u64 << (csp.l as u64 + 1)) - 1) & !1;
        Solver {
            n,
            nae,
            var_nae,
            neigh,
            degree,
            fixed: fixed.iter().map(|&(f, c)| (f.0, c)).collect(),
            dead: csp.is_trivially_unsat() || csp.l == 0,
            dom: vec![full; n],
            val: vec![0; n],
            trail: Vec::new(),
            nodes: 0,
            max_nodes: u64::MAX,
        }
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    fn set_dom(&mut self, v: u32, d: u64) {
        let old = self.dom[v as usize];
        if old != d {
            self.trail.push(Undo::Dom(v, old));
            self.dom[v as usize] = d;
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Undo::Dom(v, d) => self.dom[v as usize] = d,
                Undo::Val(v) => self.val[v as usize] = 0,
            }
        }
    }

    /// Assigns and propagates; false on a wipe-out.
    fn assign(&mut self, v: u32, c: Colour) -> bool {
        let bit = 1u64 << c;
        if self.dom[v as usize] & bit == 0 {
            return false;
        }
        self.val[v as usize] = c;
        self.trail.push(Undo::Val(v));
        self.set_dom(v, bit);
        for i in 0..self.neigh[v as usize].len() {
            let u = self.neigh[v as usize][i];
            if self.val[u as usize] == c {
                return false;
            }
            let d = self.dom[u as usize];
            if self.val[u as usize] == 0 && d & bit != 0 {
                let nd = d & !bit;
                if nd == 0 {
                    return false;
                }
                self.set_dom(u, nd);
            }
        }
        for i in 0..self.var_nae[v as usize].len() {
            let k = self.var_nae[v as usize][i] as usize;
            let mut open = None;
            let mut open_count = 0;
            let mut common: Option<Colour> = None;
            let mut mixed = false;
            for &u in &self.nae[k] {
                let x = self.val[u as usize];
                if x == 0 {
                    open_count += 1;
                    open = Some(u);
                } else {
                    match common {
                        None => common = Some(x),
                        Some(y) if y != x => mixed = true,
                        _ => {}
                    }
                }
            }
            if mixed {
                continue;
            }
            let c0 = common.expect("v is assigned");
            if open_count == 0 {
                return false;
            }
            if open_count == 1 {
                let u = open.unwrap();
                let d = self.dom[u as usize] & !(1u64 << c0);
                if d == 0 {
                    return false;
                }
                self.set_dom(u, d);
            }
        }
        true
    }

    fn start(&mut self, max_nodes: u64) -> bool {
        self.max_nodes = max_nodes;
        self.nodes = 0;
        if self.dead {
            return false;
        }
        for i in 0..self.fixed.len() {
            let (v, c) = self.fixed[i];
            if self.val[v as usize] == c {
                continue;
            }
            if self.val[v as usize] != 0 || !self.assign(v, c) {
                return false;
            }
        }
        true
    }

    fn pick(&self) -> Option<u32> {
        let mut best: Option<(u32, u32, u32)> = None;
        for v in 0..self.n {
            if self.val[v] != 0 {
                continue;
            }
            let size = self.dom[v].count_ones();
            let key = (size, u32::MAX - self.degree[v], v as u32);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        best.map(|b| b.2)
    }

    fn first_rec(&mut self) -> Result<bool, Stop> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Stop);
        }
        let Some(v) = self.pick() else {
            return Ok(true);
        };
        let mut d = self.dom[v as usize];
        while d != 0 {
            let c = d.trailing_zeros() as Colour;
            d &= d - 1;
            let mark = self.trail.len();
            if self.assign(v, c) && self.first_rec()? {
                return Ok(true);
            }
            self.undo_to(mark);
        }
        Ok(false)
    }

    /// First colouring found by most-constrained-first search with
    /// ascending colours.
    pub fn first(&mut self, max_nodes: u64) -> Outcome {
        let mark = self.trail.len();
        let out = if !self.start(max_nodes) {
            Outcome::Unsat
        } else {
            match self.first_rec() {
                Ok(true) => Outcome::Found(self.val.clone()),
                Ok(false) => Outcome::Unsat,
                Err(Stop) => Outcome::Unknown,
            }
        };
        self.undo_to(mark);
        out
    }

    fn count_rec(&mut self, i: usize, max_used: Colour, count: &mut u64, cap: u64) -> Result<(), Stop> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Stop);
        }
        if i == self.n {
            *count += 1;
            return if *count >= cap { Err(Stop) } else { Ok(()) };
        }
        let mut d = self.dom[i];
        if self.val[i] != 0 {
            d = 1u64 << self.val[i];
        }
        while d != 0 {
            let c = d.trailing_zeros() as Colour;
            d &= d - 1;
            if c > max_used + 1 {
                break;
            }
            let mark = self.trail.len();
            let ok = self.val[i] == c || self.assign(i as u32, c);
            if ok {
                let r = self.count_rec(i + 1, max_used.max(c), count, cap);
                if r.is_err() {
                    self.undo_to(mark);
                    return r;
                }
            }
            self.undo_to(mark);
        }
        Ok(())
    }

    /// Number of colourings in canonical form (each new colour is the least
    /// unused one, in flat order), which is the number of orbits under
    /// colour permutations. Stops at `cap`.
    pub fn count_canonical(&mut self, cap: u64) -> Count {
        let mark = self.trail.len();
        if !self.start(u64::MAX) {
            self.undo_to(mark);
            return Count::Exact(0);
        }
        let mut count = 0;
        let r = self.count_rec(0, 0, &mut count, cap.max(1));
        self.undo_to(mark);
        match r {
            Ok(()) => Count::Exact(count),
            Err(Stop) => Count::AtLeast(count),
        }
    }
}
