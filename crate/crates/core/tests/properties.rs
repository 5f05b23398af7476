use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pregeomzol_core::colouring::{find_colouring, same_colour_all};
use pregeomzol_core::logic::{evaluate, Assignment, EvalBudget, Formula};
use pregeomzol_core::sampling::{sample_coloured, sample_rng, Sampler, SamplerConfig};
use pregeomzol_core::structures::{
    admissible_tuples, closed_substructure, reduct_dim, substitute, validate, validate_colouring_fn, ColourRule,
    Colour, ColouredStructure, RelStructure, Semantics, Structure, Vocabulary,
};
use pregeomzol_core::{Family, Kind, Point, Pregeometry};

const SPACES: [(Kind, u32, u32); 9] = [
    (Kind::Linear, 2, 3),
    (Kind::Linear, 2, 4),
    (Kind::Linear, 3, 2),
    (Kind::Linear, 5, 2),
    (Kind::Affine, 2, 4),
    (Kind::Affine, 3, 3),
    (Kind::Projective, 2, 4),
    (Kind::Projective, 3, 3),
    (Kind::Trivial, 0, 6),
];

fn space(i: usize) -> Pregeometry {
    let (kind, q, rank) = SPACES[i];
    Pregeometry::new(kind, q, rank).unwrap()
}

/// Closure by enumerating combinations of coordinate vectors: every
/// combination for linear spaces, coefficient sum one for affine spaces,
/// nonzero combinations up to scaling for projective spaces.
struct SpanOracle {
    kind: Kind,
    q: u32,
    by_vector: HashMap<Vec<u8>, Point>,
    coords: Vec<Vec<u8>>,
}

impl SpanOracle {
    fn new(pg: &Pregeometry) -> Self {
        let q = pg.q();
        let mut by_vector = HashMap::new();
        let coords: Vec<Vec<u8>> = pg.points().map(|p| pg.coordinates(p)).collect();
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
        let dim = self.coords[0].len();
        let q = self.q;
        let mut out = BTreeSet::new();
        let mut coeff = vec![0u32; s.len()];
        loop {
            let sum = coeff.iter().sum::<u32>() % q;
            let mut v = vec![0u8; dim];
            for (c, p) in coeff.iter().zip(s) {
                for (x, y) in v.iter_mut().zip(&self.coords[p.idx()]) {
                    *x = ((*x as u32 + c * *y as u32) % q) as u8;
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
                if coeff[i] == q {
                    coeff[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }
}

fn closure_set(pg: &Pregeometry, s: &[Point]) -> BTreeSet<Point> {
    pg.closure(s).unwrap().points().iter().copied().collect()
}

fn points(pg: &Pregeometry, raw: &[u32]) -> Vec<Point> {
    raw.iter().map(|&i| Point(i % pg.universe_size())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closure_matches_span_oracle(i in 0..SPACES.len(), raw in prop::collection::vec(any::<u32>(), 0..5)) {
        let pg = space(i);
        let s = points(&pg, &raw);
        let cl = closure_set(&pg, &s);
        prop_assert_eq!(&cl, &SpanOracle::new(&pg).closure(&s));
        prop_assert!(s.iter().all(|p| cl.contains(p)));
        let again: Vec<Point> = cl.iter().copied().collect();
        prop_assert_eq!(closure_set(&pg, &again), cl.clone());
        prop_assert_eq!(pg.rank_of(&s).unwrap() as usize, pg.greedy_basis(&s).len());
        prop_assert_eq!(pg.is_independent(&s).unwrap(), pg.rank_of(&s).unwrap() as usize == s.len());
        let basis = pg.greedy_basis(&s);
        prop_assert_eq!(closure_set(&pg, &basis), cl);
    }

    #[test]
    fn closure_is_monotone_and_exchanges(
        i in 0..SPACES.len(),
        raw in prop::collection::vec(any::<u32>(), 0..4),
        extra in prop::collection::vec(any::<u32>(), 0..3),
        a in any::<u32>(),
        b in any::<u32>(),
    ) {
        let pg = space(i);
        let s = points(&pg, &raw);
        let mut t = s.clone();
        t.extend(points(&pg, &extra));
        prop_assert!(closure_set(&pg, &s).is_subset(&closure_set(&pg, &t)));
        let (a, b) = (Point(a % pg.universe_size()), Point(b % pg.universe_size()));
        let with = |x: Point| {
            let mut v = s.clone();
            v.push(x);
            closure_set(&pg, &v)
        };
        if with(b).contains(&a) && !closure_set(&pg, &s).contains(&a) {
            prop_assert!(with(a).contains(&b));
        }
        let theta = pg.theta(&s, a).unwrap();
        prop_assert_eq!(theta, closure_set(&pg, &s).contains(&a));
    }

    #[test]
    fn closure_intersection_over_common_point(seed in any::<u64>(), nv in 0usize..3, nw in 0usize..3) {
        let pg = Pregeometry::new(Kind::Linear, 2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked: Vec<Point> = (0..1 + nv + nw).map(|_| Point(rng.gen_range(0..32))).collect();
        prop_assume!(pg.is_independent(&picked).unwrap());
        let a = picked[0];
        let left: Vec<Point> = picked[..1 + nv].to_vec();
        let mut right = vec![a];
        right.extend(&picked[1 + nv..]);
        let meet: BTreeSet<Point> = closure_set(&pg, &left).intersection(&closure_set(&pg, &right)).copied().collect();
        prop_assert_eq!(meet, closure_set(&pg, &[a]));
    }

    #[test]
    fn independent_iso_preserves_closure(i in 0..SPACES.len(), seed in any::<u64>(), k in 1usize..4) {
        let pg = space(i);
        let (kind, q, rank) = SPACES[i];
        let big = Pregeometry::new(kind, q, rank + 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src: Vec<Point> = (0..k).map(|_| Point(rng.gen_range(0..pg.universe_size()))).collect();
        let dst: Vec<Point> = (0..k).map(|_| Point(rng.gen_range(0..big.universe_size()))).collect();
        prop_assume!(pg.is_independent(&src).unwrap() && big.is_independent(&dst).unwrap());
        let map = pg.extend_independent_iso(&src, &big, &dst).unwrap();
        let domain: Vec<Point> = map.keys().copied().collect();
        prop_assert_eq!(domain.iter().copied().collect::<BTreeSet<_>>(), closure_set(&pg, &src));
        let image: BTreeSet<Point> = map.values().copied().collect();
        prop_assert_eq!(image.len(), domain.len());
        prop_assert_eq!(image, closure_set(&big, &dst));
        for (j, s) in src.iter().enumerate() {
            prop_assert_eq!(map[s], dst[j]);
        }
        let n = domain.len().min(16);
        let subsets: Box<dyn Iterator<Item = Vec<Point>>> = if n <= 8 {
            Box::new((0u32..1 << n).map(|mask| (0..n).filter(|b| mask >> b & 1 == 1).map(|b| domain[b]).collect()))
        } else {
            Box::new((0..200).map(|_| (0..3).map(|_| domain[rng.gen_range(0..n)]).collect::<Vec<_>>()))
        };
        for x in subsets {
            let fx: Vec<Point> = x.iter().map(|p| map[p]).collect();
            let lhs: BTreeSet<Point> = closure_set(&pg, &x).iter().map(|p| map[p]).collect();
            prop_assert_eq!(lhs, closure_set(&big, &fx));
        }
    }

    #[test]
    fn rank_one_flats_partition(i in 0..SPACES.len()) {
        let pg = space(i);
        let zero: BTreeSet<Point> = pg.closure_of_empty().iter().copied().collect();
        let mut seen = BTreeSet::new();
        for f in pg.one_dim_flats() {
            prop_assert_eq!(f.rank(), 1);
            for &p in f.points() {
                if !zero.contains(&p) {
                    prop_assert!(seen.insert(p));
                }
            }
        }
        prop_assert_eq!(seen.len() + zero.len(), pg.universe_size() as usize);
        for p in pg.points() {
            prop_assert_eq!(pg.parse_point(&pg.format_point(p)).unwrap(), p);
            match pg.flat_of(p) {
                Some(f) => prop_assert!(pg.flat1(f).contains(p)),
                None => prop_assert!(zero.contains(&p)),
            }
        }
    }
}

fn random_coloured(seed: u64, rank: u32, l: Colour, symmetric: bool, density: f64) -> (Arc<Pregeometry>, ColouredStructure) {
    let pg = Arc::new(Pregeometry::new(Kind::Linear, 2, rank).unwrap());
    let vocab = Arc::new(Vocabulary::single(2, symmetric).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let colours: Vec<Colour> = (0..pg.num_flats1()).map(|_| rng.gen_range(1..=l)).collect();
    let mut rel = RelStructure::empty(pg.clone(), vocab);
    let n = pg.universe_size();
    for a in 0..n {
        for b in 0..n {
            if (!symmetric || a != b) && rng.gen_bool(density) {
                rel.insert(0, &[Point(a), Point(b)]).unwrap();
            }
        }
    }
    (pg.clone(), ColouredStructure::new(rel, l, colours).unwrap())
}

fn semantics(strong: bool, tuple: bool) -> Semantics {
    Semantics::new(strong, if tuple { ColourRule::Tuple } else { ColourRule::Closure })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn colouring_check_agrees_with_validate(
        seed in any::<u64>(),
        rank in 1u32..4,
        l in 2u8..4,
        symmetric in any::<bool>(),
        strong in any::<bool>(),
        tuple in any::<bool>(),
        density in 0.0f64..0.15,
    ) {
        let (_, m) = random_coloured(seed, rank, l, symmetric, density);
        let sem = semantics(strong, tuple);
        let direct = validate(&m, sem).is_empty();
        prop_assert_eq!(validate_colouring_fn(m.rel(), m.colours().unwrap(), l, sem).unwrap(), direct);
    }

    #[test]
    fn found_colourings_are_valid(seed in any::<u64>(), rank in 2u32..4, l in 2u8..4, strong in any::<bool>()) {
        let (_, m) = random_coloured(seed, rank, l, false, 0.03);
        let sem = semantics(strong, false);
        if let Some(gamma) = find_colouring(m.rel(), l, sem) {
            prop_assert!(validate_colouring_fn(m.rel(), &gamma, l, sem).unwrap());
            let coloured = ColouredStructure::new(m.rel().clone(), l, gamma.clone()).unwrap();
            prop_assert!(validate(&coloured, sem).is_empty());
            let pg = m.pg();
            for a in pg.points().filter(|&p| !pg.in_closure_of_empty(p)).take(4) {
                for b in pg.points().filter(|&p| !pg.in_closure_of_empty(p)) {
                    if same_colour_all(m.rel(), a, b, l, sem).unwrap() {
                        prop_assert_eq!(coloured.colour_of(a), coloured.colour_of(b));
                    }
                }
            }
        }
    }

    #[test]
    fn reducts_stay_valid(seed in any::<u64>(), rank in 1u32..5, symmetric in any::<bool>(), strong in any::<bool>()) {
        let pg = Arc::new(Pregeometry::new(Kind::Linear, 2, rank).unwrap());
        let vocab = Arc::new(Vocabulary::single(2, symmetric).unwrap());
        let sem = semantics(strong, false);
        let l = if strong { 3 } else { 2 };
        let m = sample_coloured(&pg, &vocab, l, sem, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(validate(&m, sem).is_empty());
        prop_assert_eq!(reduct_dim(&m, rank), m.clone());
        for d in 0..=rank {
            let r = reduct_dim(&m, d);
            prop_assert_eq!(reduct_dim(&r, d), r.clone());
            if d >= 1 {
                prop_assert!(validate(&r, sem).is_empty());
            }
        }
    }

    #[test]
    fn substitution_is_valid_and_local(seed in any::<u64>(), rank in 2u32..4) {
        let pg = Arc::new(Pregeometry::new(Kind::Linear, 2, rank).unwrap());
        let vocab = Arc::new(Vocabulary::single(2, false).unwrap());
        let sem = Semantics::WEAK;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = sample_coloured(&pg, &vocab, 2, sem, &mut rng);
        let x = Point(rng.gen_range(1..pg.universe_size()));
        let y = Point(rng.gen_range(1..pg.universe_size()));
        let a = pg.closure(&[x, y]).unwrap();
        let (old, embed) = closed_substructure(&m, &a).unwrap();
        let sub = old.pg();
        let mut fresh = old.rel().clone();
        fresh.clear_symbol(0);
        for t in old.rel().tuples(0) {
            if sub.rank_of(&t).unwrap() < a.rank() {
                fresh.insert(0, &t).unwrap();
            }
        }
        for t in admissible_tuples(sub, 2, false, old.colours().unwrap(), sem) {
            if sub.rank_of(&t).unwrap() == a.rank() && rng.gen::<bool>() {
                fresh.insert(0, &t).unwrap();
            }
        }
        let a_new = ColouredStructure::new(fresh, 2, old.colours().unwrap().to_vec()).unwrap();
        let out = substitute(&m, &a, &a_new).unwrap();
        prop_assert!(validate(&out, sem).is_empty());
        prop_assert_eq!(closed_substructure(&out, &a).unwrap().0, a_new);
        prop_assert_eq!(out.colours(), m.colours());
        let whole = |t: &Vec<Point>| pg.closure(t).unwrap().points() == a.points();
        let outside = |s: &ColouredStructure| -> BTreeSet<Vec<Point>> {
            s.rel().tuples(0).into_iter().filter(|t| !whole(t) && pg.rank_of(t).unwrap() <= a.rank()).collect()
        };
        prop_assert_eq!(outside(&out), outside(&m));
        prop_assert!(out.rel().tuples(0).iter().all(|t| pg.rank_of(t).unwrap() <= a.rank()));
        prop_assert_eq!(embed.len(), a.len());
    }

    #[test]
    fn sampler_streams_are_reproducible(seed in any::<u64>(), index in 0u64..1000, strong in any::<bool>()) {
        let sem = semantics(strong, false);
        let cfg = SamplerConfig {
            family: Family::linear(2),
            rank: 3,
            vocab: Vocabulary::single(2, false).unwrap(),
            l: 3,
            semantics: sem,
            seed,
            samples: 1,
        };
        let a = Sampler::new(&cfg, 3).unwrap().sample(index);
        let b = Sampler::new(&cfg, 3).unwrap().sample(index);
        prop_assert!(validate(&a, sem).is_empty());
        prop_assert_eq!(&a, &b);
        let pg = Arc::new(Pregeometry::new(Kind::Linear, 2, 3).unwrap());
        let direct = sample_coloured(&pg, &Arc::new(cfg.vocab.clone()), 3, sem, &mut sample_rng(seed, 3, index));
        prop_assert_eq!(a, direct);
    }
}

fn var_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["a", "b", "c"])
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        (var_name(), var_name()).prop_map(|(x, y)| Formula::eq(x, y)),
        var_name().prop_map(|x| Formula::theta(&[], x)),
        (var_name(), var_name()).prop_map(|(x, y)| Formula::in_cl(x, y)),
        (var_name(), var_name(), var_name()).prop_map(|(x, y, z)| Formula::theta(&[x, y], z)),
        (var_name(), var_name()).prop_map(|(x, y)| Formula::rel("R", &[x, y])),
        Just(Formula::True),
        Just(Formula::False),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Formula::Or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (var_name(), inner.clone()).prop_map(|(x, f)| Formula::Exists(vec![x.into()], Box::new(f))),
            (var_name(), inner).prop_map(|(x, f)| Formula::Forall(vec![x.into()], Box::new(f))),
        ]
    })
}

fn truth(m: &dyn Structure, f: &Formula, asg: &Assignment) -> bool {
    evaluate(m, f, asg, &EvalBudget::UNLIMITED).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn evaluator_respects_connective_laws(
        f in formula(),
        g in formula(),
        seed in any::<u64>(),
        kind in 0usize..3,
    ) {
        let pg = Arc::new(match kind {
            0 => Pregeometry::new(Kind::Linear, 2, 3).unwrap(),
            1 => Pregeometry::new(Kind::Affine, 3, 2).unwrap(),
            _ => Pregeometry::new(Kind::Projective, 2, 3).unwrap(),
        });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = RelStructure::empty(pg.clone(), Arc::new(Vocabulary::single(2, false).unwrap()));
        let n = pg.universe_size();
        for _ in 0..rng.gen_range(0..12) {
            m.insert(0, &[Point(rng.gen_range(0..n)), Point(rng.gen_range(0..n))]).unwrap();
        }
        let asg: Assignment = ["a", "b", "c"].into_iter().map(|v| (v, Point(rng.gen_range(0..n)))).collect();
        let tf = truth(&m, &f, &asg);
        let tg = truth(&m, &g, &asg);
        prop_assert_eq!(truth(&m, &Formula::not(Formula::not(f.clone())), &asg), tf);
        prop_assert_eq!(truth(&m, &Formula::And(vec![f.clone(), g.clone()]), &asg), tf && tg);
        prop_assert_eq!(truth(&m, &Formula::Or(vec![f.clone(), g.clone()]), &asg), tf || tg);
        prop_assert_eq!(
            truth(&m, &Formula::not(Formula::And(vec![f.clone(), g.clone()])), &asg),
            truth(&m, &Formula::Or(vec![Formula::not(f.clone()), Formula::not(g.clone())]), &asg)
        );
        prop_assert_eq!(truth(&m, &Formula::implies(f.clone(), g.clone()), &asg), !tf || tg);
        prop_assert_eq!(truth(&m, &Formula::iff(f.clone(), g.clone()), &asg), tf == tg);
        let all = Formula::Forall(vec!["a".into()], Box::new(f.clone()));
        let not_some_not = Formula::not(Formula::Exists(vec!["a".into()], Box::new(Formula::not(f.clone()))));
        prop_assert_eq!(truth(&m, &all, &asg), truth(&m, &not_some_not, &asg));
        let text = f.to_string();
        prop_assert_eq!(text.parse::<Formula>().unwrap(), f);
    }
}
