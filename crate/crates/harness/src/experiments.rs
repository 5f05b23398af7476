//! One runner per experiment kind, plus `run` and `rerun`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use pregeomzol_core::colouring::{count_colourings_up_to_perm, find_colouring, find_u, min_ramsey_dim, Count, USearch};
use pregeomzol_core::logic::{
    build_extension_axiom, evaluate_with, Assignment, Definitions, Formula, NativeRelation, XI,
};
use pregeomzol_core::sampling::{estimate_probability, exact_measure, Event, Sampler};
use pregeomzol_core::structures::{
    count_structures, enumerate_coloured, validate, ColouredStructure, RelStructure, StructureJson, Violation,
};
use pregeomzol_core::{Estimate64, Flat, Kind, Point, Rational};

use crate::config::{BuiltinPair, ExperimentKind, ExperimentSpec, ExtensionSpec};
use crate::error::{HarnessError, Result};
use crate::output::{write_all, write_atomic, Artifact, Manifest, MANIFEST};
use crate::trend::annotate;
use crate::xi_report::{check_xi_report, summarize, xi_relation};

const DEFAULT_WEAK_B_RANK: u32 = 3;
const DEFAULT_MAX_NODES: u64 = 100_000_000;

/// What a runner produced. `failures` are internal invariant violations,
/// `capped` are searches stopped by a resource bound.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub failures: Vec<String>,
    pub capped: Vec<String>,
}

impl Outcome {
    fn exit_code(&self) -> i32 {
        if !self.failures.is_empty() {
            3
        } else if !self.capped.is_empty() {
            2
        } else {
            0
        }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub failures: Vec<String>,
    pub capped: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

/// Runs the experiment, writes its data files and the manifest into `dir`.
pub fn run(spec: &ExperimentSpec, dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let hash = spec.hash();
    let outcome = dispatch(spec, &hash)?;
    let outputs = write_all(dir, &outcome.artifacts)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: spec.kind.name().into(),
        spec_hash: hash,
        seed: spec.seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
        exit_code: outcome.exit_code(),
        spec: spec.clone(),
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| HarnessError::Invariant(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(&dir.join(MANIFEST), &bytes)?;
    Ok(RunReport { dir: dir.to_path_buf(), manifest, failures: outcome.failures, capped: outcome.capped })
}

#[derive(Debug)]
pub struct RerunReport {
    pub run: RunReport,
    /// Files whose checksum differs from the manifest, or that are missing.
    pub mismatches: Vec<String>,
}

/// Reruns the experiment recorded in a manifest and compares data checksums.
pub fn rerun(manifest_path: &Path, dir: &Path) -> Result<RerunReport> {
    let old = Manifest::read(manifest_path)?;
    if old.spec.hash() != old.spec_hash {
        return Err(HarnessError::config("manifest spec does not match its recorded hash"));
    }
    let run = run(&old.spec, dir)?;
    let mut mismatches = Vec::new();
    for f in &old.outputs {
        match run.manifest.outputs.iter().find(|g| g.name == f.name) {
            Some(g) if g.sha256 == f.sha256 => {}
            Some(_) => mismatches.push(format!("{}: checksum differs", f.name)),
            None => mismatches.push(format!("{}: not produced", f.name)),
        }
    }
    for g in &run.manifest.outputs {
        if !old.outputs.iter().any(|f| f.name == g.name) {
            mismatches.push(format!("{}: not in manifest", g.name));
        }
    }
    Ok(RerunReport { run, mismatches })
}

fn dispatch(spec: &ExperimentSpec, hash: &str) -> Result<Outcome> {
    match spec.kind {
        ExperimentKind::Enumerate => enumerate(spec),
        ExperimentKind::Sample => sample(spec, hash),
        ExperimentKind::CheckXi => check_xi(spec, hash),
        ExperimentKind::ZeroOne => zero_one(spec, hash),
        ExperimentKind::UniqueColouring => unique_colouring(spec, hash),
        ExperimentKind::RamseyMinDim => ramsey(spec),
        ExperimentKind::ExtAxiom => ext_axiom(spec),
        ExperimentKind::FindU => find_u_run(spec),
        ExperimentKind::Validate => validate_run(spec),
    }
}

#[derive(Serialize)]
struct EnumerateRow {
    n: u32,
    flats1: usize,
    colourings: u128,
    coloured_structures: u128,
    colourable_structures: Option<usize>,
    measure_total: Option<String>,
}

#[derive(Serialize)]
struct DumpLine {
    n: u32,
    index: usize,
    probability: String,
    structure: StructureJson,
}

fn enumerate(spec: &ExperimentSpec) -> Result<Outcome> {
    let vocab = Arc::new(spec.vocabulary()?);
    let sem = spec.semantics();
    let cap = spec.caps.max_cells as u128;
    let mut rows = Vec::new();
    let mut dump = String::new();
    let mut out = Outcome::default();
    for n in spec.ranks()? {
        let pg = Arc::new(spec.family.build(n)?);
        let flats1 = pg.num_flats1();
        let colourings = (spec.l as u128).checked_pow(flats1 as u32).unwrap_or(u128::MAX);
        let total = count_structures(&pg, &vocab, spec.l, sem, cap)?;
        let mut row = EnumerateRow {
            n,
            flats1,
            colourings,
            coloured_structures: total,
            colourable_structures: None,
            measure_total: None,
        };
        if total <= cap {
            let all = enumerate_coloured(&pg, &vocab, spec.l, sem, cap)?;
            let reducts: HashSet<RelStructure> = all.iter().map(|m| m.forget_colours()).collect();
            row.colourable_structures = Some(reducts.len());
            if spec.dump {
                let measure = exact_measure::<Rational>(&pg, &vocab, spec.l, sem, cap)?;
                let mass = measure.total();
                if mass != Rational::from_integer(1.into()) {
                    out.failures.push(format!("rank {n}: measure sums to {mass}"));
                }
                row.measure_total = Some(mass.to_string());
                for (index, (m, p)) in measure.structures.iter().zip(&measure.probs).enumerate() {
                    let line = DumpLine { n, index, probability: p.to_string(), structure: StructureJson::from_structure(m) };
                    dump.push_str(&serde_json::to_string(&line).map_err(|e| HarnessError::Invariant(e.to_string()))?);
                    dump.push('\n');
                }
            }
        } else {
            out.capped.push(format!("rank {n}: {total} structures exceed max_cells {cap}"));
        }
        rows.push(row);
    }
    out.artifacts.push(Artifact::json("enumerate.json", &rows)?);
    if spec.dump {
        out.artifacts.push(Artifact::text("structures.jsonl", dump));
    }
    Ok(out)
}

#[derive(Serialize)]
struct SampleRow {
    n: u32,
    sample: u64,
    tuples: usize,
    colours_used: usize,
    valid: bool,
    seed: u64,
    spec_hash: String,
}

#[derive(Serialize)]
struct SampleLine {
    n: u32,
    sample: u64,
    structure: StructureJson,
}

fn sample(spec: &ExperimentSpec, hash: &str) -> Result<Outcome> {
    let cfg = spec.sampler_config()?;
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut lines = String::new();
    for n in spec.ranks()? {
        let sampler = Sampler::new(&cfg, n)?;
        for i in 0..cfg.samples {
            let m = sampler.sample(i);
            let violations = validate(&m, cfg.semantics);
            if !violations.is_empty() {
                out.failures.push(format!("rank {n} sample {i}: {} violations", violations.len()));
            }
            let mut used: Vec<_> = m.colours().unwrap_or(&[]).to_vec();
            used.sort_unstable();
            used.dedup();
            rows.push(SampleRow {
                n,
                sample: i,
                tuples: m.rel().relation_count(),
                colours_used: used.len(),
                valid: violations.is_empty(),
                seed: cfg.seed,
                spec_hash: hash.into(),
            });
            let line = SampleLine { n, sample: i, structure: StructureJson::from_structure(&m) };
            lines.push_str(&serde_json::to_string(&line).map_err(|e| HarnessError::Invariant(e.to_string()))?);
            lines.push('\n');
        }
    }
    out.artifacts.push(Artifact::csv("samples.csv", &rows)?);
    out.artifacts.push(Artifact::text("samples.jsonl", lines));
    Ok(out)
}

fn xi_for(spec: &ExperimentSpec) -> Result<Arc<dyn NativeRelation>> {
    xi_relation(
        spec.family,
        spec.l,
        &spec.vocabulary()?,
        spec.semantics(),
        spec.weak_b_rank.unwrap_or(DEFAULT_WEAK_B_RANK),
        spec.caps.max_cells,
    )
}

fn check_xi(spec: &ExperimentSpec, hash: &str) -> Result<Outcome> {
    let cfg = spec.sampler_config()?;
    let xi = xi_for(spec)?;
    let mut rows = check_xi_report(&cfg, spec.ranks()?, &*xi)?;
    let mut out = Outcome::default();
    for r in &mut rows {
        r.spec_hash = hash.into();
        if r.violations() > 0 {
            out.failures.push(format!("rank {} sample {}: {} soundness violations", r.n, r.sample, r.violations()));
        }
    }
    out.artifacts.push(Artifact::csv("check-xi.csv", &rows)?);
    out.artifacts.push(Artifact::json("check-xi-summary.json", &summarize(&rows))?);
    Ok(out)
}

/// `B` and the closed set `A` of an extension spec.
pub fn extension_pair(spec: &ExperimentSpec, ext: &ExtensionSpec) -> Result<(RelStructure, Flat)> {
    let vocab = Arc::new(spec.vocabulary()?);
    match (ext.builtin, &ext.b) {
        (Some(pair), None) => {
            let rank = match pair {
                BuiltinPair::PointOverEmpty => 1,
                BuiltinPair::TupleOverPoint => 2,
            };
            let pg = Arc::new(spec.family.build(rank)?);
            let mut b = RelStructure::empty(pg.clone(), vocab.clone());
            let free: Vec<Point> = pg.points().filter(|&p| !pg.in_closure_of_empty(p)).collect();
            let a = match pair {
                BuiltinPair::PointOverEmpty => pg.closure(&[])?,
                BuiltinPair::TupleOverPoint => {
                    let v1 = free[0];
                    let v2 = *free
                        .iter()
                        .find(|&&p| pg.is_independent(&[v1, p]).unwrap_or(false))
                        .ok_or_else(|| HarnessError::config("family has no rank-2 pair"))?;
                    let arity = vocab.arity(0) as usize;
                    if arity != 2 {
                        return Err(HarnessError::config("tuple-over-point needs a binary first symbol"));
                    }
                    b.insert(0, &[v1, v2])?;
                    pg.closure(&[v1])?
                }
            };
            Ok((b, a))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let b = StructureJson::parse(&text)?.to_structure()?.into_rel();
            let gens = ext.a.iter().map(|s| b.pg().parse_point(s)).collect::<std::result::Result<Vec<_>, _>>()?;
            let a = b.pg().closure(&gens)?;
            Ok((b, a))
        }
        _ => Err(HarnessError::config("extension needs exactly one of builtin and b")),
    }
}

fn extension_axiom(spec: &ExperimentSpec, ext: &ExtensionSpec) -> Result<(Formula, usize)> {
    let (b, a) = extension_pair(spec, ext)?;
    let cap = ext.max_colourings.unwrap_or(spec.caps.max_cells) as u128;
    Ok(build_extension_axiom(&b, &a, spec.l, spec.semantics(), cap)?)
}

fn needs_xi(spec: &ExperimentSpec) -> bool {
    spec.sentences
        .iter()
        .any(|s| s.extension.is_some() || s.formula.as_deref().is_some_and(|f| f.contains("(def")))
}

fn definitions(spec: &ExperimentSpec) -> Result<Definitions> {
    let mut defs = Definitions::new();
    defs.define_native(XI, xi_for(spec)?);
    Ok(defs)
}

fn trend_outputs(kind: &str, estimates: &[Estimate64], hash: &str) -> Result<Vec<Artifact>> {
    let (rows, summaries) = annotate(estimates, hash);
    Ok(vec![Artifact::csv(&format!("{kind}.csv"), &rows)?, Artifact::json(&format!("{kind}-trend.json"), &summaries)?])
}

#[derive(Serialize)]
struct SentenceText {
    name: String,
    size: usize,
    prenex_levels: (u32, u32),
    formula: String,
}

fn zero_one(spec: &ExperimentSpec, hash: &str) -> Result<Outcome> {
    let cfg = spec.sampler_config()?;
    if spec.sentences.is_empty() {
        return Err(HarnessError::config("zero-one needs at least one sentence"));
    }
    let defs = if needs_xi(spec) { definitions(spec)? } else { Definitions::new() };
    let budget = spec.caps.budget();
    let mut texts = Vec::new();
    let mut estimates = Vec::new();
    for s in &spec.sentences {
        let formula = match (&s.formula, &s.extension) {
            (Some(text), _) => text.parse::<Formula>()?,
            (None, Some(ext)) => extension_axiom(spec, ext)?.0,
            (None, None) => unreachable!("checked at load"),
        };
        if !formula.free_vars().is_empty() {
            return Err(HarnessError::config(format!("sentence {} has free variables", s.name)));
        }
        texts.push(SentenceText {
            name: s.name.clone(),
            size: formula.size(),
            prenex_levels: formula.prenex_levels(),
            formula: formula.to_string(),
        });
        let (f, d) = (&formula, &defs);
        let event = Event::Predicate {
            name: s.name.clone(),
            test: Box::new(move |m: &ColouredStructure| evaluate_with(m.rel(), f, d, &Assignment::new(), &budget)),
        };
        estimates.extend(estimate_probability::<f64>(&cfg, &event, spec.ranks()?)?);
    }
    let mut out = Outcome { artifacts: trend_outputs("zero-one", &estimates, hash)?, ..Outcome::default() };
    out.artifacts.push(Artifact::json("sentences.json", &texts)?);
    Ok(out)
}

fn unique_colouring(spec: &ExperimentSpec, hash: &str) -> Result<Outcome> {
    let cfg = spec.sampler_config()?;
    let (l, sem) = (spec.l, spec.semantics());
    let event = Event::Predicate {
        name: "unique-colouring".into(),
        test: Box::new(move |m: &ColouredStructure| {
            Ok(count_colourings_up_to_perm(m.rel(), l, sem, 2) == Count::Exact(1))
        }),
    };
    let estimates = estimate_probability::<f64>(&cfg, &event, spec.ranks()?)?;
    Ok(Outcome { artifacts: trend_outputs("unique-colouring", &estimates, hash)?, ..Outcome::default() })
}

fn ramsey(spec: &ExperimentSpec) -> Result<Outcome> {
    if spec.family.kind != Kind::Linear {
        return Err(HarnessError::config("ramsey-min-dim runs over linear families"));
    }
    let target = spec.target_rank.unwrap_or(2);
    let n_max = spec.n_max.unwrap_or(4);
    let report = min_ramsey_dim(spec.family.q, spec.l, target, n_max, spec.max_nodes.unwrap_or(DEFAULT_MAX_NODES))?;
    let mut out = Outcome::default();
    if report.levels.last().is_some_and(|lv| !lv.exhausted) {
        out.capped.push(format!("search stopped at max_nodes before deciding rank {}", report.levels.last().unwrap().n));
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        q: u32,
        l: u8,
        target_rank: u32,
        #[serde(flatten)]
        report: &'a pregeomzol_core::colouring::RamseyReport,
    }
    let doc = Doc { q: spec.family.q, l: spec.l, target_rank: target, report: &report };
    out.artifacts.push(Artifact::json("ramsey.json", &doc)?);
    Ok(out)
}

fn read_structure(path: &Path) -> Result<ColouredStructure> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(StructureJson::parse(&text)?.to_structure()?)
}

fn ext_axiom(spec: &ExperimentSpec) -> Result<Outcome> {
    let ext = spec.extension.as_ref().ok_or_else(|| HarnessError::config("ext-axiom needs an extension table"))?;
    let (b, a) = extension_pair(spec, ext)?;
    let cap = ext.max_colourings.unwrap_or(spec.caps.max_cells) as u128;
    let (axiom, patterns) = build_extension_axiom(&b, &a, spec.l, spec.semantics(), cap)?;
    #[derive(Serialize)]
    struct Evaluation {
        structure: PathBuf,
        holds: Option<bool>,
        budget_exceeded: bool,
    }
    let mut evaluations = Vec::new();
    if !spec.structures.is_empty() {
        let defs = definitions(spec)?;
        for path in &spec.structures {
            let m = read_structure(path)?;
            let r = evaluate_with(m.rel(), &axiom, &defs, &Assignment::new(), &spec.caps.budget());
            let (holds, budget_exceeded) = match r {
                Ok(v) => (Some(v), false),
                Err(pregeomzol_core::Error::BudgetExceeded { .. }) => (None, true),
                Err(e) => return Err(e.into()),
            };
            evaluations.push(Evaluation { structure: path.clone(), holds, budget_exceeded });
        }
    }
    #[derive(Serialize)]
    struct Doc {
        b: StructureJson,
        a: Vec<String>,
        colour_patterns: usize,
        size: usize,
        prenex_levels: (u32, u32),
        formula: String,
        evaluations: Vec<Evaluation>,
    }
    let doc = Doc {
        b: StructureJson::from_structure(&ColouredStructure::uncoloured(b.clone(), spec.l)),
        a: a.points().iter().map(|&p| b.pg().format_point(p)).collect(),
        colour_patterns: patterns,
        size: axiom.size(),
        prenex_levels: axiom.prenex_levels(),
        formula: axiom.to_string(),
        evaluations,
    };
    let mut out = Outcome::default();
    out.artifacts.push(Artifact::json("ext-axiom.json", &doc)?);
    out.artifacts.push(Artifact::text("ext-axiom.sexpr", axiom.pretty() + "\n"));
    Ok(out)
}

fn find_u_run(spec: &ExperimentSpec) -> Result<Outcome> {
    let search = spec.search.unwrap_or(USearch { seed: spec.seed.unwrap_or(0), ..USearch::default() });
    let vocab = Arc::new(spec.vocabulary()?);
    let found = find_u(spec.family, spec.l, &vocab, spec.semantics(), search)?;
    #[derive(Serialize)]
    struct Doc {
        search: USearch,
        found: bool,
        rank: Option<u32>,
        sample: Option<u64>,
        structure: Option<StructureJson>,
    }
    let mut out = Outcome::default();
    let doc = match found {
        Some(u) => Doc {
            search,
            found: true,
            rank: Some(u.rank),
            sample: Some(u.sample),
            structure: Some(StructureJson::from_structure(&ColouredStructure::uncoloured(u.u, spec.l))),
        },
        None => {
            out.capped.push(format!("no structure needing {} colours up to rank {}", spec.l, search.max_rank));
            Doc { search, found: false, rank: None, sample: None, structure: None }
        }
    };
    out.artifacts.push(Artifact::json("find-u.json", &doc)?);
    Ok(out)
}

fn validate_run(spec: &ExperimentSpec) -> Result<Outcome> {
    if spec.structures.is_empty() {
        return Err(HarnessError::config("validate needs structures = [\"file.json\", ...]"));
    }
    #[derive(Serialize)]
    struct Report {
        structure: PathBuf,
        coloured: bool,
        valid: Option<bool>,
        violations: Vec<Violation>,
        colourable: Option<bool>,
        colouring: Option<Vec<u8>>,
    }
    let sem = spec.semantics();
    let mut reports = Vec::new();
    for path in &spec.structures {
        let m = read_structure(path)?;
        let r = if m.colours().is_some() {
            let violations = validate(&m, sem);
            Report {
                structure: path.clone(),
                coloured: true,
                valid: Some(violations.is_empty()),
                violations,
                colourable: None,
                colouring: None,
            }
        } else {
            let gamma = find_colouring(m.rel(), m.l(), sem);
            Report {
                structure: path.clone(),
                coloured: false,
                valid: None,
                violations: Vec::new(),
                colourable: Some(gamma.is_some()),
                colouring: gamma,
            }
        };
        reports.push(r);
    }
    Ok(Outcome { artifacts: vec![Artifact::json("validate.json", &reports)?], ..Outcome::default() })
}
