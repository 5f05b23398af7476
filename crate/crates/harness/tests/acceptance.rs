//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so the report is always printed.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pregeomzol::config::ExperimentKind;
use pregeomzol::trend::TrendRow;
use pregeomzol::xi_report::{check_xi_report, xi_relation};
use pregeomzol::{load, run, Overrides};
use pregeomzol_core::colouring::{find_c0_and_build_b, min_ramsey_dim, same_colour_classes};
use pregeomzol_core::logic::{
    build_extension_axiom, build_weak_xi, build_xi_strong, closure_first_order, evaluate_with, Assignment,
    Definitions, EvalBudget, Formula, XiStrongIndex, XiStrongNative, XI,
};
use pregeomzol_core::prob::{total_variation, Probability};
use pregeomzol_core::sampling::{exact_measure, sample_coloured, sample_rng, Measure};
use pregeomzol_core::structures::{
    admissible_tuples, build_witness_b_strong, count_structures, enumerate_coloured, has_extension_property, validate,
    Colour, ColourRule, ColouredStructure, RelStructure, Semantics, Structure, Vocabulary,
};
use pregeomzol_core::{Family, Flat, FlatId, Kind, Point, Pregeometry, Rational};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))
}

fn space(kind: Kind, q: u32, rank: u32) -> Arc<Pregeometry> {
    Arc::new(Pregeometry::new(kind, q, rank).unwrap())
}

fn binary(symmetric: bool) -> Arc<Vocabulary> {
    Arc::new(Vocabulary::single(2, symmetric).unwrap())
}

fn holds_at(m: &dyn Structure, f: &Formula, defs: &Definitions, asg: &[(&str, Point)]) -> bool {
    evaluate_with(m, f, defs, &asg.iter().copied().collect::<Assignment>(), &EvalBudget::UNLIMITED).unwrap()
}

/// Closure by enumerating coordinate combinations, independent of the
/// library's echelon forms.
struct SpanOracle {
    kind: Kind,
    q: u32,
    by_vector: HashMap<Vec<u8>, Point>,
    coords: Vec<Vec<u8>>,
}

impl SpanOracle {
    fn new(pg: &Pregeometry) -> Self {
        let q = pg.q();
        let coords: Vec<Vec<u8>> = pg.points().map(|p| pg.coordinates(p)).collect();
        let mut by_vector = HashMap::new();
        for p in pg.points() {
            let v = &coords[p.idx()];
            if pg.kind() == Kind::Projective {
                for s in 1..q {
                    by_vector.insert(v.iter().map(|&x| ((x as u32 * s) % q) as u8).collect(), p);
                }
            } else {
                by_vector.insert(v.clone(), p);
            }
        }
        SpanOracle { kind: pg.kind(), q, by_vector, coords }
    }

    fn closure(&self, s: &[Point]) -> BTreeSet<Point> {
        if self.kind == Kind::Trivial {
            return s.iter().copied().collect();
        }
        let dim = self.coords.first().map_or(0, |c| c.len());
        let mut out = BTreeSet::new();
        let mut coeff = vec![0u32; s.len()];
        loop {
            let sum = coeff.iter().sum::<u32>() % self.q;
            let mut v = vec![0u8; dim];
            for (c, p) in coeff.iter().zip(s) {
                for (x, y) in v.iter_mut().zip(&self.coords[p.idx()]) {
                    *x = ((*x as u32 + c * *y as u32) % self.q) as u8;
                }
            }
            let keep = match self.kind {
                Kind::Linear => true,
                Kind::Affine => sum == 1,
                _ => v.iter().any(|&x| x != 0),
            };
            if keep {
                out.insert(self.by_vector[&v]);
            }
            let mut i = 0;
            loop {
                if i == s.len() {
                    return out;
                }
                coeff[i] += 1;
                if coeff[i] == self.q {
                    coeff[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    fn independent(&self, s: &[Point]) -> bool {
        (0..s.len()).all(|i| !self.closure(&s[..i]).contains(&s[i]))
    }
}

fn closure_set(pg: &Pregeometry, s: &[Point]) -> BTreeSet<Point> {
    pg.closure(s).unwrap().points().iter().copied().collect()
}

fn subsets_up_to(n: u32, k: usize) -> Vec<Vec<Point>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for s in &frontier {
            let from = s.last().map_or(0, |p: &Point| p.0 + 1);
            for i in from..n {
                let mut t = s.clone();
                t.push(Point(i));
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn suites() -> Vec<(Kind, u32, u32)> {
    let mut v = Vec::new();
    for n in 1..=4 {
        v.push((Kind::Linear, 2, n));
    }
    for n in 1..=3 {
        v.push((Kind::Linear, 3, n));
    }
    for n in 1..=4 {
        v.push((Kind::Affine, 2, n));
    }
    for n in 1..=4 {
        v.push((Kind::Projective, 2, n));
    }
    for n in 0..=6 {
        v.push((Kind::Trivial, 0, n));
    }
    v
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut checks = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (kind, q, rank) in suites() {
        let pg = space(kind, q, rank);
        let oracle = SpanOracle::new(&pg);
        let n = pg.universe_size();
        let name = format!("{kind} q={q} rank={rank}");
        let small = subsets_up_to(n, 3);
        let mut cl: HashMap<Vec<Point>, BTreeSet<Point>> = HashMap::new();
        for s in &small {
            let c = closure_set(&pg, s);
            ensure(c == oracle.closure(s), || format!("{name}: closure of {s:?} differs from span"))?;
            ensure(s.iter().all(|p| c.contains(p)), || format!("{name}: reflexivity at {s:?}"))?;
            let cv: Vec<Point> = c.iter().copied().collect();
            ensure(closure_set(&pg, &cv) == c, || format!("{name}: idempotence at {s:?}"))?;
            cl.insert(s.clone(), c);
            checks += 3;
        }
        for t in &small {
            for mask in 0u32..1 << t.len() {
                let s: Vec<Point> = (0..t.len()).filter(|b| mask >> b & 1 == 1).map(|b| t[b]).collect();
                ensure(cl[&s].is_subset(&cl[t]), || format!("{name}: monotonicity {s:?} in {t:?}"))?;
                checks += 1;
            }
        }
        for s in small.iter().filter(|s| s.len() <= 2) {
            for a in pg.points() {
                let mut sa = s.clone();
                sa.push(a);
                sa.sort();
                sa.dedup();
                let cla = closure_set(&pg, &sa);
                for b in cla.difference(&cl[s]) {
                    let mut sb = s.clone();
                    sb.push(*b);
                    ensure(closure_set(&pg, &sb).contains(&a), || format!("{name}: exchange {s:?} {a} {b}"))?;
                    checks += 1;
                }
            }
        }
        // finite character: the closure of any set is the closure of an
        // independent subset of it of size rank(S)
        for _ in 0..100 {
            let size = rng.gen_range(0..=8.min(n as usize));
            let s: Vec<Point> = (0..size).map(|_| Point(rng.gen_range(0..n.max(1)))).filter(|_| n > 0).collect();
            let mut basis: Vec<Point> = Vec::new();
            for &p in &s {
                if !oracle.closure(&basis).contains(&p) {
                    basis.push(p);
                }
            }
            let c = closure_set(&pg, &s);
            ensure(c == oracle.closure(&basis), || format!("{name}: finite character at {s:?}"))?;
            ensure(pg.rank_of(&s).unwrap() as usize == basis.len(), || format!("{name}: rank of {s:?}"))?;
            checks += 2;
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{} spaces, {checks} checks, {:.1?}", suites().len(), start.elapsed()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let pg = space(Kind::Linear, 2, 5);
    let mut cache: HashMap<u32, u32> = HashMap::new();
    let mut cl = |mask: u32| -> u32 {
        *cache.entry(mask).or_insert_with(|| {
            let s: Vec<Point> = (0..32).filter(|i| mask >> i & 1 == 1).map(Point).collect();
            pg.closure(&s).unwrap().points().iter().fold(0, |m, p| m | 1 << p.0)
        })
    };
    let bit = |p: u32| 1u32 << p;
    let pairs = |forbid: u32| -> Vec<u32> {
        let mut out = vec![0];
        for i in 1..32 {
            if forbid & bit(i) == 0 {
                out.push(bit(i));
                for j in i + 1..32 {
                    if forbid & bit(j) == 0 {
                        out.push(bit(i) | bit(j));
                    }
                }
            }
        }
        out
    };
    let members = |m: u32| (0..32).filter(move |i| m >> i & 1 == 1);
    let mut configs = 0u64;
    let mut violations = 0u64;
    for a in 1..32u32 {
        let ca = cl(bit(a));
        for v in pairs(bit(a)) {
            // independent: each element outside the closure of the earlier ones
            let mut acc = bit(a);
            if !members(v).all(|p| {
                let ok = cl(acc) & bit(p) == 0;
                acc |= bit(p);
                ok
            }) {
                continue;
            }
            let av = acc;
            for w in pairs(av) {
                let mut acc = av;
                if !members(w).all(|p| {
                    let ok = cl(acc) & bit(p) == 0;
                    acc |= bit(p);
                    ok
                }) {
                    continue;
                }
                configs += 1;
                if cl(av) & cl(bit(a) | w) != ca {
                    violations += 1;
                }
            }
        }
    }
    ensure(violations == 0, || format!("{violations} violations in {configs} configurations"))?;
    ensure(configs > 0, || "no configurations".into())?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("{configs} independent configurations, 0 violations, {:.1?}", start.elapsed()))
}

fn criterion_3() -> Outcome {
    let mut anchors = Vec::new();
    for (kind, q, rank) in suites() {
        let pg = space(kind, q, rank);
        let oracle = SpanOracle::new(&pg);
        let name = format!("{kind} q={q} rank={rank}");
        for k in 1..=rank {
            let mut brute: BTreeSet<BTreeSet<Point>> = BTreeSet::new();
            for s in subsets_up_to(pg.universe_size(), k as usize).into_iter().filter(|s| s.len() == k as usize) {
                if oracle.independent(&s) {
                    brute.insert(oracle.closure(&s));
                }
            }
            let lib: BTreeSet<BTreeSet<Point>> = pg
                .flats_of_rank(k, 1 << 20)
                .unwrap()
                .iter()
                .map(|f| f.points().iter().copied().collect())
                .collect();
            ensure(lib == brute, || format!("{name}: rank-{k} flats {} vs brute force {}", lib.len(), brute.len()))?;
            if k == 1 {
                let ones: BTreeSet<BTreeSet<Point>> =
                    pg.one_dim_flats().iter().map(|f| f.points().iter().copied().collect()).collect();
                ensure(ones == brute && pg.num_flats1() == brute.len(), || format!("{name}: one_dim_flats"))?;
            }
            if kind == Kind::Linear && q == 2 && (rank == 3 || rank == 4) && k <= 2 {
                anchors.push(brute.len());
            }
        }
    }
    ensure(anchors == [7, 7, 15, 35], || format!("GF(2) anchors {anchors:?}"))?;
    Ok("all suites match; GF(2)^3 has 7/7 and GF(2)^4 has 15/35 flats of rank 1/2".into())
}

fn criterion_4() -> Outcome {
    let pg = space(Kind::Linear, 2, 2);
    let m: Measure<Rational> = exact_measure(&pg, &binary(false), 2, Semantics::WEAK, 1 << 20).map_err(|e| e.to_string())?;
    let eighth = Rational::inv_pow(8, 1);
    let mono = m.probability(|s| s.rel().is_relation_free() && s.colours().unwrap().iter().all(|&c| c == 1));
    ensure(mono == eighth, || format!("all-colour-1 empty structure has {mono}"))?;
    ensure(m.total() == Rational::from_count(1), || "measure does not sum to 1".into())?;
    let mut marginal: HashMap<Vec<Colour>, Rational> = HashMap::new();
    for (s, p) in m.structures.iter().zip(&m.probs) {
        let e = marginal.entry(s.colours().unwrap().to_vec()).or_insert_with(|| Rational::from_count(0));
        *e = e.clone() + p.clone();
    }
    ensure(marginal.len() == 8 && marginal.values().all(|p| *p == eighth), || {
        format!("colouring marginal has {} atoms", marginal.len())
    })?;
    let mut counts = Vec::new();
    for (rule, symmetric, expect) in [
        (ColourRule::Tuple, true, 26u128),
        (ColourRule::Tuple, false, 98),
        (ColourRule::Closure, true, 50),
        (ColourRule::Closure, false, 386),
    ] {
        let n = count_structures(&pg, &binary(symmetric), 2, Semantics::new(false, rule), 1 << 20).unwrap();
        let brute = enumerate_coloured(&pg, &binary(symmetric), 2, Semantics::new(false, rule), 1 << 20).unwrap().len();
        ensure(n == expect && brute as u128 == n, || format!("{rule}/symmetric={symmetric}: {n} ({brute} listed)"))?;
        counts.push(format!("{rule}+{}={n}", if symmetric { "symmetric" } else { "ordered" }));
    }
    Ok(format!("P = 1/8, 8 atoms of 1/8; |K_2|: {} (26 reproduced by tuple+symmetric)", counts.join(", ")))
}

struct SamplerCheck {
    label: String,
    tv: f64,
    noise_floor: f64,
    freq: (f64, f64),
}

fn sampler_check(rule: ColourRule, symmetric: bool, seed: u64, n: u64) -> SamplerCheck {
    let pg = space(Kind::Linear, 2, 2);
    let vocab = binary(symmetric);
    let sem = Semantics::new(false, rule);
    let m: Measure<f64> = exact_measure(&pg, &vocab, 2, sem, 1 << 20).unwrap();
    let index: HashMap<&ColouredStructure, usize> = m.structures.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut counts = vec![0u64; m.structures.len()];
    let mut included: HashMap<Vec<Point>, (u64, u64)> = HashMap::new();
    for i in 0..n {
        let s = sample_coloured(&pg, &vocab, 2, sem, &mut sample_rng(seed, 2, i));
        counts[index[&s]] += 1;
        for t in admissible_tuples(&pg, 2, symmetric, s.colours().unwrap(), sem) {
            let e = included.entry(t.clone()).or_default();
            e.1 += 1;
            e.0 += s.holds(0, &t) as u64;
        }
    }
    let emp: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let tv = total_variation(&emp, &m.probs);
    let noise_floor: f64 =
        m.probs.iter().map(|p| (2.0 * p * (1.0 - p) / (std::f64::consts::PI * n as f64)).sqrt()).sum::<f64>() / 2.0;
    let rates: Vec<f64> = included.values().map(|&(y, a)| y as f64 / a as f64).collect();
    let freq = (rates.iter().copied().fold(1.0, f64::min), rates.iter().copied().fold(0.0, f64::max));
    let mode = if symmetric { "symmetric" } else { "ordered" };
    SamplerCheck { label: format!("{rule}+{mode} ({} atoms)", m.structures.len()), tv, noise_floor, freq }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let mut asserted = Vec::new();
    for (rule, symmetric) in [(ColourRule::Tuple, true), (ColourRule::Closure, true), (ColourRule::Tuple, false)] {
        let c = sampler_check(rule, symmetric, 1, n);
        ensure(c.tv < 0.02, || format!("{}: tv {:.4}", c.label, c.tv))?;
        ensure(c.freq.0 >= 0.49 && c.freq.1 <= 0.51, || format!("{}: inclusion {:?}", c.label, c.freq))?;
        asserted.push(format!("{} tv={:.4}", c.label, c.tv));
    }
    // 386 atoms: the expected TV of an exact sampler at this size exceeds 0.02
    let c = sampler_check(ColourRule::Closure, false, 1, n);
    ensure(c.freq.0 >= 0.49 && c.freq.1 <= 0.51, || format!("{}: inclusion {:?}", c.label, c.freq))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{}; inclusion in [0.49, 0.51] everywhere; {} tv={:.4} against iid noise floor {:.4}, not asserted",
        asserted.join(", "),
        c.label,
        c.tv,
        c.noise_floor
    ))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/check-xi.toml");
    let spec = load(ExperimentKind::CheckXi, Some(&config), &Overrides::default()).map_err(|e| e.to_string())?;
    let cfg = spec.sampler_config().map_err(|e| e.to_string())?;
    let ranks = spec.ranks().map_err(|e| e.to_string())?;
    ensure(
        cfg.family == Family::linear(2)
            && cfg.l == 3
            && cfg.semantics.strong
            && cfg.vocab.symbols().len() == 1
            && cfg.vocab.arity(0) == 2
            && ranks == (3..=7)
            && cfg.samples == 500,
        || format!("config is not the criterion instance: {cfg:?} {ranks:?}"),
    )?;
    let xi = xi_relation(cfg.family, cfg.l, &cfg.vocab, cfg.semantics, 3, 1 << 22).map_err(|e| e.to_string())?;
    let rows = check_xi_report(&cfg, ranks, xi.as_ref()).map_err(|e| e.to_string())?;
    let colour: u64 = rows.iter().map(|r| r.soundness_violations_colour).sum();
    let oracle: u64 = rows.iter().map(|r| r.soundness_violations_oracle).sum();
    let positives: u64 = rows.iter().map(|r| r.xi_true).sum();
    ensure(rows.len() == 2500, || format!("{} rows", rows.len()))?;
    ensure(colour == 0 && oracle == 0, || format!("violations: colour {colour}, oracle {oracle}"))?;
    ensure(positives > 0, || "formula never true".into())?;
    within(start, Duration::from_secs(600))?;
    Ok(format!("2500 structures, {positives} pairs with xi true, 0 violations, {:.1?}", start.elapsed()))
}

fn criterion_7() -> Outcome {
    let w = build_witness_b_strong(Family::linear(2), &binary(false), 3, 2, 1).map_err(|e| e.to_string())?;
    let bad = validate(&w.structure, Semantics::STRONG);
    ensure(bad.is_empty(), || format!("not strongly 3-coloured: {:?}", bad[0]))?;
    ensure(w.structure.l() == 3, || "wrong colour count".into())?;
    let f = build_xi_strong("R", 3, 2).map_err(|e| e.to_string())?;
    ensure(holds_at(&w.structure, &f, &Definitions::new(), &[("x", w.a), ("y", w.b)]), || {
        "formula false on the designated pair".into()
    })?;
    ensure(XiStrongIndex::new(&w.structure, 0, 3).holds(w.a, w.b), || "index false on the designated pair".into())?;
    Ok(format!("rank {} witness valid, xi(a, b) holds", w.structure.pg().rank()))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let pg = space(Kind::Linear, 2, 3);
    let r = find_c0_and_build_b(&pg, 2, &binary(false), Semantics::WEAK, 1 << 16).map_err(|e| e.to_string())?;
    let coloured = ColouredStructure::new(r.b.clone(), 2, r.c0.clone()).map_err(|e| e.to_string())?;
    let bad = validate(&coloured, Semantics::WEAK);
    ensure(bad.is_empty(), || format!("(B, c0) not 2-coloured: {:?}", bad[0]))?;
    let all: Vec<Point> = pg.points().collect();
    let order = closure_first_order(&pg, &[r.b1, r.b2], &all);
    let weak = build_weak_xi(&r.b, &order, r.b1, r.b2).map_err(|e| e.to_string())?;
    let (b1, b2) = (weak.enumeration[0], weak.enumeration[1]);
    ensure(holds_at(&r.b, &weak.xi0, &Definitions::new(), &[("x", b1), ("y", b2)]), || "xi0(b1, b2) false".into())?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("{} colourings swept, {} tuples in B, xi0(b1, b2) true", r.swept, r.b.relation_count()))
}

fn criterion_9() -> Outcome {
    let report = min_ramsey_dim(2, 2, 2, 4, 100_000_000).map_err(|e| e.to_string())?;
    ensure(report.min_dim == Some(3), || format!("min_dim {:?}", report.min_dim))?;
    let plane = report.levels.iter().find(|l| l.n == 2).ok_or("no level 2")?;
    let avoid = plane.avoiding.as_ref().ok_or("no avoiding colouring at rank 2")?;
    let pg = space(Kind::Linear, 2, 2);
    let colours: BTreeSet<Colour> = (1..4).map(|i| avoid[pg.flat_of(Point(i)).unwrap().idx()]).collect();
    ensure(colours.len() == 2, || format!("rank-2 colouring {avoid:?} is monochromatic"))?;
    // every 2-colouring of the seven points of GF(2)^3 has a monochromatic
    // line {x, y, x + y}
    let lines: Vec<[u32; 3]> =
        (1..8u32).flat_map(|x| (x + 1..8).map(move |y| [x, y, x ^ y])).filter(|l| l[2] > l[1]).collect();
    ensure(lines.len() == 7, || format!("{} lines", lines.len()))?;
    let escapes = (0u32..1 << 7)
        .filter(|mask| lines.iter().all(|l| l.iter().map(|&p| mask >> (p - 1) & 1).collect::<BTreeSet<_>>().len() == 2))
        .count();
    ensure(escapes == 0, || format!("{escapes} colourings of rank 3 avoid every line"))?;
    let three = report.levels.iter().find(|l| l.n == 3).ok_or("no level 3")?;
    ensure(three.exhausted && three.avoiding.is_none(), || "rank 3 not exhausted".into())?;
    Ok("min_dim 3: avoiding colouring at rank 2, all 128 colourings at rank 3 fail".into())
}

fn brute_classes(rel: &RelStructure, l: Colour, sem: Semantics) -> BTreeSet<BTreeSet<usize>> {
    let flats = rel.pg().num_flats1();
    let mut valid = Vec::new();
    let mut gamma = vec![1 as Colour; flats];
    loop {
        let m = ColouredStructure::new(rel.clone(), l, gamma.clone()).unwrap();
        if validate(&m, sem).is_empty() {
            valid.push(gamma.clone());
        }
        let mut i = 0;
        while i < flats && gamma[i] == l {
            gamma[i] = 1;
            i += 1;
        }
        if i == flats {
            break;
        }
        gamma[i] += 1;
    }
    let mut classes: Vec<BTreeSet<usize>> = Vec::new();
    for f in 0..flats {
        match classes.iter_mut().find(|c| {
            let g = *c.iter().next().unwrap();
            valid.iter().all(|v| v[f] == v[g])
        }) {
            Some(c) => {
                c.insert(f);
            }
            None => classes.push(BTreeSet::from([f])),
        }
    }
    classes.into_iter().collect()
}

fn criterion_10() -> Outcome {
    let pg = space(Kind::Linear, 2, 2);
    let mut checked = 0;
    for l in [2, 3] {
        for sem in [Semantics::WEAK, Semantics::STRONG, Semantics::new(false, ColourRule::Tuple)] {
            let all = enumerate_coloured(&pg, &binary(false), l, sem, 1 << 20).unwrap();
            let rels: HashSet<&RelStructure> = all.iter().map(|m| m.rel()).collect();
            for rel in rels {
                let (classes, _) = same_colour_classes(rel, l, sem).map_err(|e| e.to_string())?;
                let lib: BTreeSet<BTreeSet<usize>> =
                    classes.iter().map(|c| c.iter().map(|f: &FlatId| f.idx()).collect()).collect();
                let brute = brute_classes(rel, l, sem);
                ensure(lib == brute, || format!("l={l} {sem:?}: {lib:?} vs {brute:?}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} colourable structures, classes agree"))
}

/// A rank-4 binary space where every nonzero point `p` has one partner
/// `q` with `R(p, q)`, each pair on its own rainbow line.
fn all_patterns_host() -> (ColouredStructure, Vec<(Point, Point)>) {
    let pg = space(Kind::Linear, 2, 4);
    let lines = pg.flats_of_rank(2, 1000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    loop {
        let cols: Vec<Colour> = (0..pg.num_flats1()).map(|_| rng.gen_range(1..=3)).collect();
        let colour = |x: Point| cols[pg.flat_of(x).unwrap().idx()];
        let rainbow: Vec<&Flat> = lines
            .iter()
            .filter(|f| f.points().iter().filter(|p| p.0 != 0).map(|&p| colour(p)).collect::<BTreeSet<_>>().len() == 3)
            .collect();
        let pts: Vec<Point> = pg.points().filter(|p| p.0 != 0).collect();
        let mut owner: Vec<Option<usize>> = vec![None; rainbow.len()];
        fn augment(i: usize, pts: &[Point], lines: &[&Flat], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
            for (j, l) in lines.iter().enumerate() {
                if l.contains(pts[i]) && !seen[j] {
                    seen[j] = true;
                    if owner[j].is_none() || augment(owner[j].unwrap(), pts, lines, owner, seen) {
                        owner[j] = Some(i);
                        return true;
                    }
                }
            }
            false
        }
        if !(0..pts.len()).all(|i| augment(i, &pts, &rainbow, &mut owner, &mut vec![false; rainbow.len()])) {
            continue;
        }
        let mut rel = RelStructure::empty(pg.clone(), binary(false));
        let mut pairs = Vec::new();
        for (j, o) in owner.iter().enumerate() {
            if let Some(i) = o {
                let p = pts[*i];
                let q = rainbow[j].points().iter().copied().find(|&x| x.0 != 0 && x != p).unwrap();
                rel.insert(0, &[p, q]).unwrap();
                pairs.push((p, q));
            }
        }
        return (ColouredStructure::new(rel, 3, cols).unwrap(), pairs);
    }
}

fn criterion_11() -> Outcome {
    let mut defs = Definitions::new();
    defs.define_native(XI, Arc::new(XiStrongNative { sym: 0, l: 3 }));

    // A of rank 0 inside B of rank 1
    let line = space(Kind::Linear, 2, 1);
    let b = RelStructure::empty(line.clone(), binary(false));
    let a = line.closure(&[]).unwrap();
    let (ax, _) = build_extension_axiom(&b, &a, 3, Semantics::STRONG, 1000).map_err(|e| e.to_string())?;
    ensure(ax.prenex_levels().1 <= 3 && ax.free_vars().is_empty(), || format!("shape {:?}", ax.prenex_levels()))?;
    let plane = space(Kind::Linear, 2, 2);
    let rainbow = ColouredStructure::new(RelStructure::empty(plane.clone(), binary(false)), 3, vec![1, 2, 3]).unwrap();
    let two = ColouredStructure::new(RelStructure::empty(plane.clone(), binary(false)), 3, vec![1, 2, 1]).unwrap();
    let bare = RelStructure::empty(space(Kind::Linear, 2, 0), binary(false));
    ensure(holds_at(&rainbow, &ax, &defs, &[]), || "rank 0 to 1: false on the rainbow plane".into())?;
    ensure(!holds_at(&bare, &ax, &defs, &[]), || "rank 0 to 1: true on a rank-0 structure".into())?;
    for c in 1..=3 {
        let bc = ColouredStructure::new(b.clone(), 3, vec![c]).unwrap();
        ensure(has_extension_property(&rainbow, &bc, &a).unwrap(), || format!("rainbow plane lacks colour {c}"))?;
        let expect = c != 3;
        ensure(has_extension_property(&two, &bc, &a).unwrap() == expect, || format!("colour {c} on two-colour plane"))?;
    }

    // A of rank 1 inside B of rank 2 with one related pair
    let mut b2 = RelStructure::empty(plane.clone(), binary(false));
    b2.insert(0, &[Point(1), Point(2)]).unwrap();
    let a2 = plane.closure(&[Point(1)]).unwrap();
    let (ax2, _) = build_extension_axiom(&b2, &a2, 3, Semantics::STRONG, 1000).map_err(|e| e.to_string())?;
    let (host, pairs) = all_patterns_host();
    ensure(validate(&host, Semantics::STRONG).is_empty(), || "host is not strongly coloured".into())?;
    let b_open = ColouredStructure::uncoloured(b2.clone(), 3);
    ensure(holds_at(&host, &ax2, &defs, &[]), || "rank 1 to 2: false on the host".into())?;
    ensure(has_extension_property(host.rel(), &b_open, &a2).unwrap(), || "host lacks the extension".into())?;
    let mut missing = host.rel().clone();
    missing.clear_symbol(0);
    for &(p, q) in &pairs[1..] {
        missing.insert(0, &[p, q]).unwrap();
    }
    ensure(!holds_at(&missing, &ax2, &defs, &[]), || "rank 1 to 2: true after deleting a pair".into())?;
    ensure(!has_extension_property(&missing, &b_open, &a2).unwrap(), || "extension survives deletion".into())?;
    Ok("rank 0 to 1 and rank 1 to 2 axioms: true on hosts with all patterns, false with one missing".into())
}

fn read_rows(path: &Path) -> Result<Vec<TrendRow>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    r.deserialize().collect::<Result<Vec<TrendRow>, _>>().map_err(|e| e.to_string())
}

fn criterion_12() -> Outcome {
    let start = Instant::now();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (kind, file, csv_name, events) in [
        (ExperimentKind::ZeroOne, "zero-one.toml", "zero-one.csv", 3),
        (ExperimentKind::UniqueColouring, "unique-colouring.toml", "unique-colouring.csv", 1),
    ] {
        let spec = load(kind, Some(&root.join(file)), &Overrides::default()).map_err(|e| e.to_string())?;
        ensure(
            spec.family == Family::linear(2)
                && spec.l == 3
                && spec.strong
                && spec.ranks().ok() == Some(3..=8)
                && spec.samples == Some(500),
            || format!("{file} is not the criterion instance"),
        )?;
        let dir = tmp.path().join(kind.name());
        let report = run(&spec, &dir).map_err(|e| e.to_string())?;
        ensure(report.exit_code() == 0, || format!("{file}: exit {}", report.exit_code()))?;
        let rows = read_rows(&dir.join(csv_name))?;
        ensure(rows.len() == 6 * events, || format!("{csv_name}: {} rows", rows.len()))?;
        let hash = spec.hash();
        ensure(rows.iter().all(|r| r.seed == spec.seed.unwrap() && r.spec_hash == hash), || {
            format!("{csv_name}: seed or hash column wrong")
        })?;
        ensure(rows.iter().all(|r| r.samples == 500 && (3..=8).contains(&r.n)), || format!("{csv_name}: sizes"))?;
        let flagged = rows.iter().filter(|r| r.non_monotone).count();
        for r in rows.iter().filter(|r| r.n == 8) {
            notes.push(format!("{} {:.3}", r.event, r.estimate));
        }
        notes.push(format!("{flagged} non-monotone steps flagged in {csv_name}"));
    }
    within(start, Duration::from_secs(1800))?;
    Ok(format!("at n=8: {}; {:.1?}", notes.join(", "), start.elapsed()))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, check) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("criterion {n}: PASS {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
