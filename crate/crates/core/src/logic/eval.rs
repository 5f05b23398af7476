//! Formula evaluation by quantifier expansion.
//!
//! Formulas are compiled to slot-indexed nodes. A quantifier block keeps
//! its matrix as a list of conjuncts, each tested as soon as its variables
//! are bound; a variable forced by a positive closure or equality conjunct
//! ranges over that closure (or that point) only. Universal blocks are
//! evaluated as negated existential ones.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Definition, Definitions, Formula, NativeRelation, PreparedRelation, Var};
use crate::error::{Error, Result};
use crate::pregeometry::{Point, Pregeometry};
use crate::structures::{Colour, Structure};

/// Values of free variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(BTreeMap<Var, Point>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: &str, p: Point) -> Self {
        self.0.insert(v.to_string(), p);
        self
    }

    pub fn set(&mut self, v: &str, p: Point) {
        self.0.insert(v.to_string(), p);
    }

    pub fn get(&self, v: &str) -> Option<Point> {
        self.0.get(v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Point)> {
        self.0.iter()
    }
}

impl<'a> FromIterator<(&'a str, Point)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (&'a str, Point)>>(iter: I) -> Self {
        Assignment(iter.into_iter().map(|(v, p)| (v.to_string(), p)).collect())
    }
}

/// Limits on quantifier expansion. Both count candidate values tried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalBudget {
    /// Over the whole evaluation.
    pub max_assignments: u64,
    /// Within one expansion of one quantifier block.
    pub max_block: u64,
}

impl EvalBudget {
    pub const UNLIMITED: EvalBudget = EvalBudget { max_assignments: u64::MAX, max_block: u64::MAX };

    pub fn new(max_assignments: u64) -> Self {
        EvalBudget { max_assignments, max_block: u64::MAX }
    }
}

impl Default for EvalBudget {
    fn default() -> Self {
        EvalBudget { max_assignments: 2_000_000_000, max_block: u64::MAX }
    }
}

type Slot = usize;

#[derive(Debug)]
enum Node {
    Const(bool),
    Eq(Slot, Slot),
    Theta(Vec<Slot>, Slot),
    Rel(usize, Vec<Slot>),
    Colour(Colour, Slot),
    Native(usize, Vec<Slot>),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Iff(Box<Node>, Box<Node>),
    Exists(Block),
}

#[derive(Debug)]
enum Range {
    All,
    ClosureOfEmpty,
    Closure(Vec<Slot>),
    Equal(Slot),
}

#[derive(Debug)]
struct Level {
    slot: Slot,
    range: Range,
    checks: Vec<Node>,
}

#[derive(Debug)]
struct Block {
    pre: Vec<Node>,
    levels: Vec<Level>,
}

fn free_slots(n: &Node, out: &mut Vec<Slot>) {
    match n {
        Node::Const(_) => {}
        Node::Eq(a, b) => out.extend([*a, *b]),
        Node::Theta(args, p) => {
            out.extend(args);
            out.push(*p);
        }
        Node::Rel(_, args) | Node::Native(_, args) => out.extend(args),
        Node::Colour(_, x) => out.push(*x),
        Node::Not(g) => free_slots(g, out),
        Node::And(gs) | Node::Or(gs) => gs.iter().for_each(|g| free_slots(g, out)),
        Node::Iff(a, b) => {
            free_slots(a, out);
            free_slots(b, out);
        }
        Node::Exists(b) => {
            let mut inner = Vec::new();
            for g in &b.pre {
                free_slots(g, &mut inner);
            }
            for l in &b.levels {
                match &l.range {
                    Range::Closure(args) => inner.extend(args),
                    Range::Equal(s) => inner.push(*s),
                    _ => {}
                }
                for g in &l.checks {
                    free_slots(g, &mut inner);
                }
            }
            let own: Vec<Slot> = b.levels.iter().map(|l| l.slot).collect();
            out.extend(inner.into_iter().filter(|s| !own.contains(s)));
        }
    }
}

fn negate(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(g) => (**g).clone(),
        Formula::Or(fs) => Formula::And(fs.iter().map(negate).collect()),
        Formula::Implies(a, b) => Formula::And(vec![(**a).clone(), negate(b)]),
        _ => Formula::not(f.clone()),
    }
}

fn flatten_and(f: Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(fs) => fs.into_iter().for_each(|g| flatten_and(g, out)),
        Formula::True => {}
        g => out.push(g),
    }
}

struct Compiler<'d> {
    defs: &'d Definitions,
    vocab_index: HashMap<String, (usize, usize)>,
    scope: Vec<(Var, Slot)>,
    slots: usize,
    natives: Vec<(String, Arc<dyn NativeRelation>)>,
    depth: usize,
}

impl Compiler<'_> {
    fn lookup(&self, v: &Var) -> Result<Slot> {
        self.scope
            .iter()
            .rev()
            .find(|(w, _)| w == v)
            .map(|(_, s)| *s)
            .ok_or_else(|| Error::pre(format!("variable {v} is neither bound nor assigned")))
    }

    fn lookup_all(&self, vs: &[Var]) -> Result<Vec<Slot>> {
        vs.iter().map(|v| self.lookup(v)).collect()
    }

    fn compile(&mut self, f: &Formula) -> Result<Node> {
        Ok(match f {
            Formula::True => Node::Const(true),
            Formula::False => Node::Const(false),
            Formula::Eq(x, y) => Node::Eq(self.lookup(x)?, self.lookup(y)?),
            Formula::Theta(args, p) => Node::Theta(self.lookup_all(args)?, self.lookup(p)?),
            Formula::Rel(name, args) => {
                let &(sym, arity) = self
                    .vocab_index
                    .get(name)
                    .ok_or_else(|| Error::pre(format!("relation symbol {name} is not in the vocabulary")))?;
                if args.len() != arity {
                    return Err(Error::pre(format!("{name} has arity {arity}, used with {}", args.len())));
                }
                Node::Rel(sym, self.lookup_all(args)?)
            }
            Formula::Colour(c, x) => Node::Colour(*c, self.lookup(x)?),
            Formula::Def(name, args) => match self.defs.get(name) {
                None => return Err(Error::pre(format!("undefined relation {name}"))),
                Some(Definition::Native(rel)) => {
                    if rel.arity() != args.len() {
                        return Err(Error::pre(format!("{name} has arity {}", rel.arity())));
                    }
                    let idx = match self.natives.iter().position(|(n, _)| n == name) {
                        Some(i) => i,
                        None => {
                            self.natives.push((name.clone(), rel.clone()));
                            self.natives.len() - 1
                        }
                    };
                    Node::Native(idx, self.lookup_all(args)?)
                }
                Some(Definition::Formula { params, body }) => {
                    if params.len() != args.len() {
                        return Err(Error::pre(format!("{name} takes {} arguments", params.len())));
                    }
                    if self.depth > 64 {
                        return Err(Error::pre("definitions nest too deeply"));
                    }
                    let arg_slots = self.lookup_all(args)?;
                    let saved = std::mem::take(&mut self.scope);
                    self.scope = params.iter().cloned().zip(arg_slots).collect();
                    self.depth += 1;
                    let body = body.clone();
                    let out = self.compile(&body);
                    self.depth -= 1;
                    self.scope = saved;
                    out?
                }
            },
            Formula::Not(g) => Node::Not(Box::new(self.compile(g)?)),
            Formula::And(fs) => Node::And(fs.iter().map(|g| self.compile(g)).collect::<Result<_>>()?),
            Formula::Or(fs) => Node::Or(fs.iter().map(|g| self.compile(g)).collect::<Result<_>>()?),
            Formula::Implies(a, b) => Node::Or(vec![Node::Not(Box::new(self.compile(a)?)), self.compile(b)?]),
            Formula::Iff(a, b) => Node::Iff(Box::new(self.compile(a)?), Box::new(self.compile(b)?)),
            Formula::Exists(vs, g) => Node::Exists(self.block(vs, g)?),
            Formula::Forall(vs, g) => Node::Not(Box::new(Node::Exists(self.block(vs, &negate(g))?))),
        })
    }

    fn block(&mut self, vs: &[Var], body: &Formula) -> Result<Block> {
        let own: Vec<Slot> = (0..vs.len()).map(|i| self.slots + i).collect();
        self.slots += vs.len();
        let mark = self.scope.len();
        self.scope.extend(vs.iter().cloned().zip(own.iter().copied()));
        let mut parts = Vec::new();
        flatten_and(body.clone(), &mut parts);
        let compiled: Result<Vec<Node>> = parts.iter().map(|g| self.compile(g)).collect();
        self.scope.truncate(mark);
        let compiled = compiled?;

        // A variable quantified twice in one block: the later binding wins.
        let position = |s: Slot| own.iter().position(|&o| o == s);
        let mut pre = Vec::new();
        let mut by_level: Vec<Vec<Node>> = (0..own.len()).map(|_| Vec::new()).collect();
        for n in compiled {
            let mut fs = Vec::new();
            free_slots(&n, &mut fs);
            match fs.iter().filter_map(|&s| position(s)).max() {
                None => pre.push(n),
                Some(i) => by_level[i].push(n),
            }
        }
        let levels = own
            .iter()
            .zip(by_level)
            .enumerate()
            .map(|(i, (&slot, checks))| {
                let earlier = |s: &Slot| position(*s).is_none_or(|j| j < i);
                let mut range = Range::All;
                for c in &checks {
                    match c {
                        Node::Eq(a, b) if *a == slot && earlier(b) => {
                            range = Range::Equal(*b);
                            break;
                        }
                        Node::Eq(a, b) if *b == slot && earlier(a) => {
                            range = Range::Equal(*a);
                            break;
                        }
                        Node::Theta(args, p) if *p == slot && args.iter().all(earlier) => {
                            if args.is_empty() {
                                range = Range::ClosureOfEmpty;
                            } else if matches!(range, Range::All) {
                                range = Range::Closure(args.clone());
                            }
                        }
                        _ => {}
                    }
                }
                Level { slot, range, checks }
            })
            .collect();
        Ok(Block { pre, levels })
    }
}

struct Ctx<'m> {
    m: &'m dyn Structure,
    pg: &'m Pregeometry,
    vals: Vec<Point>,
    prepared: Vec<Box<dyn PreparedRelation + 'm>>,
    used: u64,
    budget: EvalBudget,
    scratch: Vec<Point>,
}

impl Ctx<'_> {
    fn in_cl1(&self, p: Point, a: Point) -> bool {
        if p == a || self.pg.in_closure_of_empty(p) {
            return true;
        }
        match (self.pg.flat_of(a), self.pg.flat_of(p)) {
            (Some(fa), Some(fp)) => fa == fp,
            _ => false,
        }
    }

    fn eval(&mut self, n: &Node) -> Result<bool> {
        Ok(match n {
            Node::Const(b) => *b,
            Node::Eq(a, b) => self.vals[*a] == self.vals[*b],
            Node::Theta(args, p) => {
                let p = self.vals[*p];
                match args.len() {
                    0 => self.pg.in_closure_of_empty(p),
                    1 => self.in_cl1(p, self.vals[args[0]]),
                    _ => {
                        let mut buf = std::mem::take(&mut self.scratch);
                        buf.clear();
                        buf.extend(args.iter().map(|&s| self.vals[s]));
                        let r = buf.contains(&p) || self.pg.theta_unchecked(&buf, p);
                        self.scratch = buf;
                        r
                    }
                }
            }
            Node::Rel(sym, args) => {
                let mut buf = std::mem::take(&mut self.scratch);
                buf.clear();
                buf.extend(args.iter().map(|&s| self.vals[s]));
                let r = self.m.rel().holds(*sym, &buf);
                self.scratch = buf;
                r
            }
            Node::Colour(c, x) => {
                if !self.m.has_colours() {
                    return Err(Error::pre("colour atom evaluated on a structure without colours"));
                }
                self.m.colour_at(self.vals[*x]) == Some(*c)
            }
            Node::Native(i, args) => {
                let buf: Vec<Point> = args.iter().map(|&s| self.vals[s]).collect();
                self.prepared[*i].holds(&buf)
            }
            Node::Not(g) => !self.eval(g)?,
            Node::And(gs) => {
                for g in gs {
                    if !self.eval(g)? {
                        return Ok(false);
                    }
                }
                true
            }
            Node::Or(gs) => {
                for g in gs {
                    if self.eval(g)? {
                        return Ok(true);
                    }
                }
                false
            }
            Node::Iff(a, b) => self.eval(a)? == self.eval(b)?,
            Node::Exists(b) => {
                for g in &b.pre {
                    if !self.eval(g)? {
                        return Ok(false);
                    }
                }
                let mut spent = 0;
                self.search(b, 0, &mut spent)?
            }
        })
    }

    fn search(&mut self, b: &Block, i: usize, spent: &mut u64) -> Result<bool> {
        let Some(level) = b.levels.get(i) else {
            return Ok(true);
        };
        let candidates: Vec<Point> = match &level.range {
            Range::All => self.pg.points().collect(),
            Range::ClosureOfEmpty => self.pg.closure_of_empty().to_vec(),
            Range::Equal(s) => vec![self.vals[*s]],
            Range::Closure(args) => {
                let pts: Vec<Point> = args.iter().map(|&s| self.vals[s]).collect();
                self.pg.closure_unchecked(&pts).points().to_vec()
            }
        };
        'cand: for p in candidates {
            self.used += 1;
            *spent += 1;
            if self.used > self.budget.max_assignments || *spent > self.budget.max_block {
                return Err(Error::BudgetExceeded { assignments: self.used });
            }
            self.vals[level.slot] = p;
            for c in &level.checks {
                if !self.eval(c)? {
                    continue 'cand;
                }
            }
            if self.search(b, i + 1, spent)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

pub fn evaluate(m: &dyn Structure, f: &Formula, asg: &Assignment, budget: &EvalBudget) -> Result<bool> {
    evaluate_with(m, f, &Definitions::new(), asg, budget)
}

/// Truth of `f` in `m` under `asg`, with `defs` resolving definition atoms.
pub fn evaluate_with(
    m: &dyn Structure,
    f: &Formula,
    defs: &Definitions,
    asg: &Assignment,
    budget: &EvalBudget,
) -> Result<bool> {
    let pg = m.pg();
    let vocab = m.vocab();
    let vocab_index = vocab.symbols().iter().enumerate().map(|(i, s)| (s.name.clone(), (i, s.arity as usize))).collect();
    let mut c = Compiler { defs, vocab_index, scope: Vec::new(), slots: 0, natives: Vec::new(), depth: 0 };
    let mut vals = Vec::new();
    for (v, &p) in asg.iter() {
        pg.check(p)?;
        c.scope.push((v.clone(), c.slots));
        c.slots += 1;
        vals.push(p);
    }
    let node = c.compile(f)?;
    vals.resize(c.slots, Point(0));
    let prepared = c.natives.iter().map(|(_, rel)| rel.prepare(m)).collect::<Result<Vec<_>>>()?;
    let mut ctx = Ctx { m, pg, vals, prepared, used: 0, budget: *budget, scratch: Vec::new() };
    ctx.eval(&node)
}
