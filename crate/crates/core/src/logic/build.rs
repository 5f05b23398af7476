//! Builders for characteristic formulas, the same-colour formulas, and the
//! sentences of the almost-sure theory.

use std::collections::{BTreeMap, HashSet};

use super::{Definitions, Formula, Var};
use crate::colouring::build_csp;
use crate::error::{Error, Result};
use crate::pregeometry::{Flat, Point, Pregeometry};
use crate::structures::{for_each_candidate_tuple, Colour, RelStructure, Semantics, Structure};

/// Name of the definition atom standing for the same-colour formula.
pub const XI: &str = "xi";

pub fn var(prefix: &str, i: usize) -> Var {
    format!("{prefix}_{i}")
}

pub fn xi_atom(x: &str, y: &str) -> Formula {
    Formula::def(XI, &[x, y])
}

/// Orders `points` starting with `seeds`: after each point taken, the rest
/// of the closure of the prefix follows in point order, then the least
/// remaining point.
pub fn closure_first_order(pg: &Pregeometry, seeds: &[Point], points: &[Point]) -> Vec<Point> {
    let mut left: Vec<Point> = points.to_vec();
    left.sort_unstable();
    left.dedup();
    let mut out: Vec<Point> = Vec::with_capacity(left.len());
    let take = |p: Point, out: &mut Vec<Point>, left: &mut Vec<Point>| {
        if let Some(i) = left.iter().position(|&q| q == p) {
            left.remove(i);
            out.push(p);
        }
    };
    for &s in seeds {
        take(s, &mut out, &mut left);
    }
    loop {
        let cl = pg.closure_unchecked(&out);
        let inside: Vec<Point> = left.iter().copied().filter(|&p| cl.contains(p)).collect();
        for p in inside {
            take(p, &mut out, &mut left);
        }
        match left.first() {
            Some(&p) => take(p, &mut out, &mut left),
            None => return out,
        }
    }
}

fn subsets_up_to(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        f(cur);
        if cur.len() == k {
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Characteristic formula of the whole structure, point `i` named `vars[i]`.
pub fn characteristic_formula(s: &dyn Structure, vars: &[Var]) -> Result<Formula> {
    let points: Vec<Point> = s.pg().points().collect();
    characteristic_formula_on(s, &points, vars)
}

/// Characteristic formula of the substructure on `points`, `points[i]`
/// named `vars[i]`: distinctness, membership or non-membership of each point
/// in the closure of every set of at most `rank(points)` others, every
/// relation atom and its negation, and colour atoms when coloured.
pub fn characteristic_formula_on(s: &dyn Structure, points: &[Point], vars: &[Var]) -> Result<Formula> {
    if points.len() != vars.len() {
        return Err(Error::pre("one variable per point"));
    }
    let pg = s.pg();
    for &p in points {
        pg.check(p)?;
    }
    let mut conj = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i] == points[j] {
                return Err(Error::pre("points must be distinct"));
            }
            conj.push(Formula::not(Formula::Eq(vars[i].clone(), vars[j].clone())));
        }
    }
    let r = pg.rank_unchecked(points) as usize;
    let mut args: Vec<Point> = Vec::new();
    subsets_up_to(points.len(), r, &mut |idx| {
        args.clear();
        args.extend(idx.iter().map(|&i| points[i]));
        let arg_vars: Vec<Var> = idx.iter().map(|&i| vars[i].clone()).collect();
        for (b, &p) in points.iter().enumerate() {
            if idx.contains(&b) {
                continue;
            }
            let atom = Formula::Theta(arg_vars.clone(), vars[b].clone());
            conj.push(if pg.theta_unchecked(&args, p) { atom } else { Formula::not(atom) });
        }
    });
    let vocab = s.vocab();
    let mut tuple = Vec::new();
    for (sym, symbol) in vocab.symbols().iter().enumerate() {
        for_each_candidate_tuple(points.len() as u32, symbol.arity, vocab.symmetric(), |t| {
            tuple.clear();
            tuple.extend(t.iter().map(|i| points[i.idx()]));
            let atom = Formula::Rel(symbol.name.clone(), t.iter().map(|i| vars[i.idx()].clone()).collect());
            conj.push(if s.rel().holds(sym, &tuple) { atom } else { Formula::not(atom) });
        });
    }
    if s.has_colours() {
        let top = s.colour_count();
        for (i, &p) in points.iter().enumerate() {
            let c = s.colour_at(p);
            for d in 1..=top {
                let atom = Formula::Colour(d, vars[i].clone());
                conj.push(if c == Some(d) { atom } else { Formula::not(atom) });
            }
        }
    }
    Ok(Formula::And(conj))
}

/// The strong-case same-colour formula for `l` colours on the relation
/// `name` of arity `r1`.
pub fn build_xi_strong(name: &str, l: Colour, r1: u32) -> Result<Formula> {
    if l < 2 || r1 < 2 {
        return Err(Error::pre("need l ≥ 2 and arity ≥ 2"));
    }
    let fill = (r1 - 2) as usize;
    let l = l as usize;
    let yv = |i: usize| var("y", i);
    let z = |tag: &str, i: usize, j: usize| format!("z_{tag}_{i}_{j}");
    let atom = |first: Var, second: Var, tag: &str, i: usize| {
        let mut args = vec![first, second];
        args.extend((1..=fill).map(|j| z(tag, i, j)));
        Formula::Rel(name.into(), args)
    };
    let mut vars = Vec::new();
    let mut conj = Vec::new();
    for i in 2..=l {
        vars.push(yv(i));
        for tag in ["x", "y"] {
            vars.extend((1..=fill).map(|j| z(tag, i, j)));
            conj.push(atom(tag.into(), yv(i), tag, i));
            conj.push(Formula::not(Formula::in_cl(&yv(i), tag)));
        }
        for j in 2..i {
            let tag = i.to_string();
            vars.extend((1..=fill).map(|k| z(&tag, j, k)));
            conj.push(atom(yv(i), yv(j), &tag, j));
            conj.push(Formula::not(Formula::in_cl(&yv(i), &yv(j))));
        }
    }
    Ok(Formula::Or(vec![
        Formula::in_cl("x", "y"),
        Formula::in_cl("y", "x"),
        Formula::exists(vars, Formula::And(conj)),
    ]))
}

/// The weak-case formulas, with free variables `x` and `y`.
#[derive(Debug, Clone)]
pub struct WeakXi {
    /// `∃z_3…z_β χ_B(x, y, z_3, …, z_β)`.
    pub xi0: Formula,
    /// `x ∈ closure(y) ∨ ∃z (xi0(x, z) ∧ xi0(y, z))`, fully inlined.
    pub xi: Formula,
    pub enumeration: Vec<Point>,
}

impl WeakXi {
    /// `xi` as a formula-backed definition named [`XI`].
    pub fn definitions(&self) -> Result<Definitions> {
        Definitions::new().with(XI, vec!["x".into(), "y".into()], self.xi.clone())
    }
}

pub fn build_weak_xi(b: &RelStructure, enumeration: &[Point], b1: Point, b2: Point) -> Result<WeakXi> {
    let n = b.pg().universe_size() as usize;
    if enumeration.len() != n || enumeration.first() != Some(&b1) || enumeration.get(1) != Some(&b2) {
        return Err(Error::pre("enumeration must list every point, starting with b1 and b2"));
    }
    let mut vars: Vec<Var> = vec!["x".into(), "y".into()];
    vars.extend((3..=n).map(|i| var("z", i)));
    let chi = characteristic_formula_on(b, enumeration, &vars)?;
    let xi0 = Formula::exists(vars[2..].to_vec(), chi);
    let rn = |from: &str, to: &str| -> BTreeMap<Var, Var> {
        [("x".to_string(), from.to_string()), ("y".to_string(), to.to_string())].into_iter().collect()
    };
    let xi = Formula::Or(vec![
        Formula::in_cl("x", "y"),
        Formula::exists(
            vec!["w".into()],
            Formula::And(vec![xi0.rename(&rn("x", "w")), xi0.rename(&rn("y", "w"))]),
        ),
    ]);
    Ok(WeakXi { xi0, xi, enumeration: enumeration.to_vec() })
}

/// Same/different colour pattern of `gamma` on `points`, as a restricted
/// growth string (points of `closure(∅)` get 0).
pub fn colour_pattern(pg: &Pregeometry, points: &[Point], gamma: &[Colour]) -> Vec<u8> {
    let mut seen: Vec<Colour> = Vec::new();
    points
        .iter()
        .map(|&p| match pg.flat_of(p) {
            None => 0,
            Some(f) => {
                let c = gamma[f.idx()];
                match seen.iter().position(|&d| d == c) {
                    Some(i) => i as u8 + 1,
                    None => {
                        seen.push(c);
                        seen.len() as u8
                    }
                }
            }
        })
        .collect()
}

/// `ζ_γ`: `θ_0` for points of `closure(∅)`, `xi` for each pair of other
/// points sharing a colour under `gamma`, `¬xi` for pairs that do not.
/// Pairs are unordered.
pub fn build_zeta(pg: &Pregeometry, points: &[Point], gamma: &[Colour], vars: &[Var]) -> Result<Formula> {
    if points.len() != vars.len() || gamma.len() != pg.num_flats1() {
        return Err(Error::pre("one variable per point and one colour per rank-1 flat"));
    }
    let mut conj = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        if pg.in_closure_of_empty(p) {
            conj.push(Formula::Theta(vec![], vars[i].clone()));
        }
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (Some(fi), Some(fj)) = (pg.flat_of(points[i]), pg.flat_of(points[j])) else {
                continue;
            };
            let atom = xi_atom(&vars[i], &vars[j]);
            conj.push(if gamma[fi.idx()] == gamma[fj.idx()] { atom } else { Formula::not(atom) });
        }
    }
    Ok(Formula::And(conj))
}

/// `η_n`: the named points form a closed set.
pub fn build_eta(vars: &[Var]) -> Formula {
    let mut w = "w".to_string();
    while vars.contains(&w) {
        w.push('_');
    }
    Formula::Forall(
        vec![w.clone()],
        Box::new(Formula::implies(
            Formula::Theta(vars.to_vec(), w.clone()),
            Formula::Or(vars.iter().map(|v| Formula::Eq(w.clone(), v.clone())).collect()),
        )),
    )
}

fn for_each_colouring(flats: usize, l: Colour, mut f: impl FnMut(&[Colour])) {
    if l == 0 {
        return;
    }
    let mut c = vec![1 as Colour; flats];
    loop {
        f(&c);
        let Some(i) = (0..flats).rev().find(|&i| c[i] < l) else {
            return;
        };
        c[i] += 1;
        for x in &mut c[i + 1..] {
            *x = 1;
        }
    }
}

/// The l-colour compatible extension axiom for the closed set `a` inside
/// `b`: one instance per colour pattern of the colourings of `b`, each as
/// `∀x̄_A ([χ_A ∧ ζ_γ ∧ η_α] → ∃x̄_B [χ_B ∧ ζ_γ' ∧ η_β])`. The existential
/// block is placed after the antecedent, which does not mention it.
///
/// Returns the conjunction and the number of instances.
pub fn build_extension_axiom(
    b: &RelStructure,
    a: &Flat,
    l: Colour,
    sem: Semantics,
    max_colourings: u128,
) -> Result<(Formula, usize)> {
    let pg = b.pg();
    let all: Vec<Point> = pg.points().collect();
    if pg.closure_unchecked(a.points()).points() != a.points() || a.points().iter().any(|p| p.idx() >= all.len()) {
        return Err(Error::pre("a must be a closed subset of b"));
    }
    if a.len() == all.len() {
        return Err(Error::pre("a must be a proper subset of b"));
    }
    let mut count: u128 = 1;
    for _ in 0..pg.num_flats1() {
        count = count.saturating_mul(l as u128);
    }
    if count > max_colourings {
        return Err(Error::cap("colourings of b", count, max_colourings));
    }
    let in_a = closure_first_order(pg, &[], a.points());
    let order = closure_first_order(pg, &in_a, &all);
    let alpha = in_a.len();
    let vars: Vec<Var> = (1..=order.len()).map(|i| var("x", i)).collect();
    let chi_a = characteristic_formula_on(b, &order[..alpha], &vars[..alpha])?;
    let chi_b = characteristic_formula_on(b, &order, &vars)?;
    let eta_a = build_eta(&vars[..alpha]);
    let eta_b = build_eta(&vars);
    let csp = build_csp(b, l, sem);
    let mut seen = HashSet::new();
    let mut instances = Vec::new();
    let mut failure = None;
    for_each_colouring(pg.num_flats1(), l, |g| {
        if failure.is_some() || !csp.is_satisfied_by(g) || !seen.insert(colour_pattern(pg, &order, g)) {
            return;
        }
        let zeta = build_zeta(pg, &order[..alpha], g, &vars[..alpha])
            .and_then(|za| Ok((za, build_zeta(pg, &order, g, &vars)?)));
        match zeta {
            Ok((za, zb)) => instances.push(Formula::forall(
                vars[..alpha].to_vec(),
                Formula::implies(
                    Formula::And(vec![chi_a.clone(), za, eta_a.clone()]),
                    Formula::exists(vars[alpha..].to_vec(), Formula::And(vec![chi_b.clone(), zb, eta_b.clone()])),
                ),
            )),
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if instances.is_empty() {
        return Err(Error::pre("b is not l-colourable"));
    }
    let n = instances.len();
    Ok((Formula::And(instances), n))
}

/// Sentences of the almost-sure theory that are built from finite data.
/// Pregeometry axioms are not listed: they are decided by the closure
/// oracle itself.
#[derive(Debug, Clone)]
pub struct TheorySentences {
    /// `xi` is an equivalence relation off `closure(∅)`.
    pub phi1: Formula,
    /// Some copy of `u` has `l` pairwise `xi`-inequivalent points meeting
    /// every `xi` class.
    pub phi2: Formula,
    /// `(n, ψ_n)`: every closed set of the size of a rank-`n` structure
    /// carries a colourable structure.
    pub psi: Vec<(u32, Formula)>,
}

impl TheorySentences {
    /// Labelled union of the sentences, extension axioms appended.
    pub fn labelled(&self, ext: &[(String, Formula)]) -> Vec<(String, Formula)> {
        let mut out = vec![
            ("T_xi/phi1".to_string(), self.phi1.clone()),
            ("T_xi/phi2".to_string(), self.phi2.clone()),
        ];
        out.extend(self.psi.iter().map(|(n, f)| (format!("T_iso/psi_{n}"), f.clone())));
        out.extend(ext.iter().map(|(name, f)| (format!("T_ext/{name}"), f.clone())));
        out
    }
}

fn permutations_of(n: usize, f: &mut impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        f(&p);
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

/// `φ1`, `φ2` for the structure `u` and `ψ_n` for each catalogue entry
/// `(n, members of C_n)`. `xi` appears through [`XI`] atoms.
/// `max_disjuncts` bounds the permutation disjunction of each `ψ_n`.
pub fn build_theory_sentences(
    u: &RelStructure,
    l: Colour,
    catalog: &[(u32, Vec<RelStructure>)],
    max_disjuncts: usize,
) -> Result<TheorySentences> {
    if catalog.is_empty() {
        return Err(Error::pre("a catalogue of colourable structures is required"));
    }
    let not0 = |v: &str| Formula::not(Formula::theta(&[], v));
    let phi1 = Formula::And(vec![
        Formula::forall(vec!["x".into()], Formula::implies(not0("x"), xi_atom("x", "x"))),
        Formula::forall(
            vec!["x".into(), "y".into()],
            Formula::implies(Formula::And(vec![not0("x"), not0("y"), xi_atom("x", "y")]), xi_atom("y", "x")),
        ),
        Formula::forall(
            vec!["x".into(), "y".into(), "z".into()],
            Formula::implies(
                Formula::And(vec![not0("x"), not0("y"), not0("z"), xi_atom("x", "y"), xi_atom("y", "z")]),
                xi_atom("x", "z"),
            ),
        ),
    ]);

    let pg = u.pg();
    let all: Vec<Point> = pg.points().collect();
    let order = closure_first_order(pg, &[], &all);
    let p = order.len();
    let vars: Vec<Var> = (1..=p).map(|i| var("x", i)).collect();
    let chi_u = characteristic_formula_on(u, &order, &vars)?;
    let l = l as usize;
    let mut options = Vec::new();
    let mut subset: Vec<usize> = (0..l.min(p)).collect();
    if l <= p {
        loop {
            let mut conj: Vec<Formula> = subset.iter().map(|&i| not0(&vars[i])).collect();
            for &i in &subset {
                for &j in &subset {
                    if i != j {
                        conj.push(Formula::not(xi_atom(&vars[i], &vars[j])));
                    }
                }
            }
            let mut cover = vec![Formula::theta(&[], "v")];
            cover.extend(subset.iter().map(|&i| xi_atom("v", &vars[i])));
            conj.push(Formula::forall(vec!["v".into()], Formula::Or(cover)));
            options.push(Formula::And(conj));
            let Some(k) = (0..l).rev().find(|&k| subset[k] < p - l + k) else {
                break;
            };
            subset[k] += 1;
            for m in k + 1..l {
                subset[m] = subset[m - 1] + 1;
            }
        }
    }
    let phi2 = Formula::exists(vars.clone(), Formula::And(vec![chi_u, Formula::Or(options)]));

    let mut psi = Vec::new();
    for (n, members) in catalog {
        let Some(first) = members.first() else {
            return Err(Error::pre(format!("catalogue for rank {n} is empty")));
        };
        let s = first.pg().universe_size() as usize;
        let xs: Vec<Var> = (1..=s).map(|i| var("x", i)).collect();
        let mut distinct = Vec::new();
        for i in 0..s {
            for j in i + 1..s {
                distinct.push(Formula::not(Formula::Eq(xs[i].clone(), xs[j].clone())));
            }
        }
        distinct.push(build_eta(&xs));
        let mut seen = HashSet::new();
        let mut disjuncts = Vec::new();
        let mut too_many = false;
        for m in members {
            let chi = characteristic_formula(m, &xs)?;
            permutations_of(s, &mut |perm| {
                if too_many {
                    return;
                }
                let map: BTreeMap<Var, Var> = (0..s).map(|i| (xs[i].clone(), xs[perm[i]].clone())).collect();
                let f = chi.rename(&map);
                if seen.insert(f.clone()) {
                    disjuncts.push(f);
                    too_many = disjuncts.len() > max_disjuncts;
                }
            });
            if too_many {
                return Err(Error::cap("disjuncts in psi", disjuncts.len() as u128, max_disjuncts as u128));
            }
        }
        psi.push((*n, Formula::forall(xs, Formula::implies(Formula::And(distinct), Formula::Or(disjuncts)))));
    }
    Ok(TheorySentences { phi1, phi2, psi })
}
