//! First-order formulas over the pregeometry language with relation and
//! colour atoms, their evaluation, and the formula families used by the
//! colour definability results.

mod build;
mod eval;
mod sexpr;
mod xi;


use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pregeometry::Point;
use crate::structures::{Colour, Structure};

pub use build::{
    build_eta, build_extension_axiom, build_theory_sentences, build_weak_xi, build_xi_strong, build_zeta,
    characteristic_formula, characteristic_formula_on, closure_first_order, colour_pattern, var, xi_atom,
    TheorySentences, WeakXi, XI,
};
pub use eval::{evaluate, evaluate_with, Assignment, EvalBudget};
pub use sexpr::parse;
pub use xi::{xi_strong_holds, WeakXiNative, XiStrongIndex, XiStrongNative};

pub type Var = String;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Eq(Var, Var),
    /// `point ∈ closure(args)`.
    Theta(Vec<Var>, Var),
    Rel(String, Vec<Var>),
    Colour(Colour, Var),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(Vec<Var>, Box<Formula>),
    Forall(Vec<Var>, Box<Formula>),
    /// A named relation supplied through [`Definitions`].
    Def(String, Vec<Var>),
}

impl Formula {
    pub fn eq(x: &str, y: &str) -> Self {
        Formula::Eq(x.into(), y.into())
    }

    pub fn theta(args: &[&str], point: &str) -> Self {
        Formula::Theta(args.iter().map(|s| s.to_string()).collect(), point.into())
    }

    /// `x ∈ closure(y)`.
    pub fn in_cl(x: &str, y: &str) -> Self {
        Formula::Theta(vec![y.into()], x.into())
    }

    pub fn rel(name: &str, args: &[&str]) -> Self {
        Formula::Rel(name.into(), args.iter().map(|s| s.to_string()).collect())
    }

    pub fn colour(c: Colour, x: &str) -> Self {
        Formula::Colour(c, x.into())
    }

    pub fn def(name: &str, args: &[&str]) -> Self {
        Formula::Def(name.into(), args.iter().map(|s| s.to_string()).collect())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(fs: Vec<Formula>) -> Self {
        Formula::And(fs)
    }

    pub fn or(fs: Vec<Formula>) -> Self {
        Formula::Or(fs)
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// `∃vars f`, or `f` itself when `vars` is empty.
    pub fn exists(vars: Vec<Var>, f: Formula) -> Self {
        if vars.is_empty() {
            f
        } else {
            Formula::Exists(vars, Box::new(f))
        }
    }

    pub fn forall(vars: Vec<Var>, f: Formula) -> Self {
        if vars.is_empty() {
            f
        } else {
            Formula::Forall(vars, Box::new(f))
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        let mut add = |v: &Var, bound: &Vec<Var>| {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(x, y) => {
                add(x, bound);
                add(y, bound);
            }
            Formula::Theta(args, p) => {
                for a in args {
                    add(a, bound);
                }
                add(p, bound);
            }
            Formula::Rel(_, args) | Formula::Def(_, args) => {
                for a in args {
                    add(a, bound);
                }
            }
            Formula::Colour(_, x) => add(x, bound),
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_free(bound, out);
                }
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(vs, f) | Formula::Forall(vs, f) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                f.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + match self {
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.size(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::size).sum(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => a.size() + b.size(),
            _ => 0,
        }
    }

    pub fn mentions_colour(&self) -> bool {
        match self {
            Formula::Colour(..) => true,
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.mentions_colour(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::mentions_colour),
            Formula::Implies(a, b) | Formula::Iff(a, b) => a.mentions_colour() || b.mentions_colour(),
            _ => false,
        }
    }

    /// Renames free occurrences by `map`, renaming bound variables that
    /// would capture a substituted name.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Formula {
        let mut fresh = 0usize;
        let avoid: BTreeSet<Var> = map.values().cloned().chain(self.all_vars()).collect();
        self.rename_in(map, &avoid, &mut fresh)
    }

    fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = self.free_vars();
        self.visit(&mut |f| {
            if let Formula::Exists(vs, _) | Formula::Forall(vs, _) = f {
                out.extend(vs.iter().cloned());
            }
        });
        out
    }

    fn visit(&self, g: &mut impl FnMut(&Formula)) {
        g(self);
        match self {
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.visit(g),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit(g)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit(g);
                b.visit(g);
            }
            _ => {}
        }
    }

    fn rename_in(&self, map: &BTreeMap<Var, Var>, avoid: &BTreeSet<Var>, fresh: &mut usize) -> Formula {
        let r = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Eq(x, y) => Formula::Eq(r(x), r(y)),
            Formula::Theta(args, p) => Formula::Theta(args.iter().map(r).collect(), r(p)),
            Formula::Rel(n, args) => Formula::Rel(n.clone(), args.iter().map(r).collect()),
            Formula::Def(n, args) => Formula::Def(n.clone(), args.iter().map(r).collect()),
            Formula::Colour(c, x) => Formula::Colour(*c, r(x)),
            Formula::Not(f) => Formula::not(f.rename_in(map, avoid, fresh)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.rename_in(map, avoid, fresh)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.rename_in(map, avoid, fresh)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.rename_in(map, avoid, fresh), b.rename_in(map, avoid, fresh)),
            Formula::Iff(a, b) => Formula::iff(a.rename_in(map, avoid, fresh), b.rename_in(map, avoid, fresh)),
            Formula::Exists(vs, f) | Formula::Forall(vs, f) => {
                let targets: BTreeSet<&Var> = map.values().collect();
                let mut inner = map.clone();
                let mut new_vs = Vec::with_capacity(vs.len());
                for v in vs {
                    inner.remove(v);
                    if targets.contains(v) {
                        let w = loop {
                            *fresh += 1;
                            let w = format!("{v}_{fresh}");
                            if !avoid.contains(&w) {
                                break w;
                            }
                        };
                        inner.insert(v.clone(), w.clone());
                        new_vs.push(w);
                    } else {
                        new_vs.push(v.clone());
                    }
                }
                let body = Box::new(f.rename_in(&inner, avoid, fresh));
                match self {
                    Formula::Exists(..) => Formula::Exists(new_vs, body),
                    _ => Formula::Forall(new_vs, body),
                }
            }
        }
    }

    /// Inlines every formula-backed definition. Natively backed definitions
    /// stay as atoms.
    pub fn expand(&self, defs: &Definitions) -> Result<Formula> {
        self.expand_depth(defs, 0)
    }

    fn expand_depth(&self, defs: &Definitions, depth: usize) -> Result<Formula> {
        if depth > 64 {
            return Err(Error::pre("definitions nest too deeply"));
        }
        let go = |f: &Formula| f.expand_depth(defs, depth);
        Ok(match self {
            Formula::Def(name, args) => match defs.get(name) {
                Some(Definition::Formula { params, body }) => {
                    if params.len() != args.len() {
                        return Err(Error::pre(format!("{name} takes {} arguments", params.len())));
                    }
                    let map = params.iter().cloned().zip(args.iter().cloned()).collect();
                    body.rename(&map).expand_depth(defs, depth + 1)?
                }
                Some(Definition::Native(_)) => self.clone(),
                None => return Err(Error::pre(format!("undefined relation {name}"))),
            },
            Formula::Not(f) => Formula::not(go(f)?),
            Formula::And(fs) => Formula::And(fs.iter().map(go).collect::<Result<_>>()?),
            Formula::Or(fs) => Formula::Or(fs.iter().map(go).collect::<Result<_>>()?),
            Formula::Implies(a, b) => Formula::implies(go(a)?, go(b)?),
            Formula::Iff(a, b) => Formula::iff(go(a)?, go(b)?),
            Formula::Exists(vs, f) => Formula::Exists(vs.clone(), Box::new(go(f)?)),
            Formula::Forall(vs, f) => Formula::Forall(vs.clone(), Box::new(go(f)?)),
            _ => self.clone(),
        })
    }

    /// Least `(σ, π)` levels of the prenex hierarchy containing the formula,
    /// with definition atoms counted as atomic.
    pub fn prenex_levels(&self) -> (u32, u32) {
        match self {
            Formula::Not(f) => {
                let (s, p) = f.prenex_levels();
                (p, s)
            }
            Formula::And(fs) | Formula::Or(fs) => fs
                .iter()
                .map(Formula::prenex_levels)
                .fold((0, 0), |(a, b), (s, p)| (a.max(s), b.max(p))),
            Formula::Implies(a, b) => {
                let (sa, pa) = a.prenex_levels();
                let (sb, pb) = b.prenex_levels();
                (pa.max(sb), sa.max(pb))
            }
            Formula::Iff(a, b) => {
                let (sa, pa) = a.prenex_levels();
                let (sb, pb) = b.prenex_levels();
                let m = sa.max(pa).max(sb).max(pb);
                if m == 0 {
                    (0, 0)
                } else {
                    (m + 1, m + 1)
                }
            }
            Formula::Exists(_, f) => {
                let (s, p) = f.prenex_levels();
                let sigma = s.max(1).min(p + 1);
                (sigma, sigma + 1)
            }
            Formula::Forall(_, f) => {
                let (s, p) = f.prenex_levels();
                let pi = p.max(1).min(s + 1);
                (pi + 1, pi)
            }
            _ => (0, 0),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.prenex_levels() == (0, 0)
    }

    /// Equivalent to `∃x̄ ψ` with `ψ` quantifier-free.
    pub fn is_existential(&self) -> bool {
        self.prenex_levels().0 <= 1
    }

    /// Equivalent to `∀x̄ ψ` with `ψ` quantifier-free.
    pub fn is_universal(&self) -> bool {
        self.prenex_levels().1 <= 1
    }

    /// Equivalent to `∀x̄∃ȳ ψ` with `ψ` quantifier-free.
    pub fn is_forall_exists(&self) -> bool {
        self.prenex_levels().1 <= 2
    }

    /// Multi-line rendering for reports.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        sexpr::pretty(self, 0, &mut out);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&sexpr::print(self))
    }
}

impl std::str::FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

/// A relation evaluated by code rather than by a formula.
pub trait NativeRelation: Send + Sync {
    fn arity(&self) -> usize;

    /// Per-structure precomputation.
    fn prepare<'m>(&self, m: &'m dyn Structure) -> Result<Box<dyn PreparedRelation + 'm>>;
}

pub trait PreparedRelation {
    fn holds(&self, args: &[Point]) -> bool;
}

#[derive(Clone)]
pub enum Definition {
    Formula { params: Vec<Var>, body: Formula },
    Native(Arc<dyn NativeRelation>),
}

impl fmt::Debug for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Definition::Formula { params, body } => write!(f, "({}) := {body}", params.join(" ")),
            Definition::Native(n) => write!(f, "<native/{}>", n.arity()),
        }
    }
}

/// Named relations usable through [`Formula::Def`] atoms.
#[derive(Debug, Clone, Default)]
pub struct Definitions {
    map: BTreeMap<String, Definition>,
}

impl Definitions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define(&mut self, name: &str, params: Vec<Var>, body: Formula) -> Result<()> {
        let free = body.free_vars();
        if let Some(v) = free.iter().find(|v| !params.contains(v)) {
            return Err(Error::pre(format!("definition of {name} has free variable {v} not among its parameters")));
        }
        self.map.insert(name.into(), Definition::Formula { params, body });
        Ok(())
    }

    pub fn define_native(&mut self, name: &str, rel: Arc<dyn NativeRelation>) {
        self.map.insert(name.into(), Definition::Native(rel));
    }

    pub fn with(mut self, name: &str, params: Vec<Var>, body: Formula) -> Result<Self> {
        self.define(name, params, body)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.map.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }
}
