//! Soundness and completeness of the same-colour formula on samples.

use std::ops::RangeInclusive;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pregeomzol_core::colouring::{find_c0_and_build_b, same_colour_classes};
use pregeomzol_core::logic::{closure_first_order, NativeRelation, WeakXiNative, XiStrongNative};
use pregeomzol_core::sampling::{Sampler, SamplerConfig};
use pregeomzol_core::structures::{Colour, Semantics, Vocabulary};
use pregeomzol_core::{Family, Point};

use crate::error::{HarnessError, Result};

/// The same-colour relation for the given setting: the strong-case formula
/// when `sem.strong`, otherwise the weak-case formula built from the
/// structure `B` found at rank `weak_b_rank`.
pub fn xi_relation(
    family: Family,
    l: Colour,
    vocab: &Vocabulary,
    sem: Semantics,
    weak_b_rank: u32,
    max_cells: u64,
) -> Result<Arc<dyn NativeRelation>> {
    if vocab.symbols()[0].arity != 2 && sem.strong {
        return Err(HarnessError::config("the strong-case formula is built for a binary first symbol"));
    }
    if sem.strong {
        let t = family.threshold(l as u32)?.t;
        if t < 2 {
            return Err(HarnessError::config(format!("strong mode needs t >= 2, here t = {t}")));
        }
        return Ok(Arc::new(XiStrongNative { sym: 0, l }));
    }
    let pg = Arc::new(family.build(weak_b_rank)?);
    let r = find_c0_and_build_b(&pg, l, &Arc::new(vocab.clone()), sem, max_cells as usize)?;
    let all: Vec<Point> = pg.points().collect();
    let order = closure_first_order(&pg, &[r.b1, r.b2], &all);
    Ok(Arc::new(WeakXiNative { b: Arc::new(r.b), b1: order[0], b2: order[1], full: true }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiRow {
    pub n: u32,
    pub sample: u64,
    /// Unordered pairs of distinct points outside `closure(∅)`.
    pub pairs: u64,
    pub xi_true: u64,
    pub colour_same: u64,
    pub oracle_same: u64,
    /// Pairs with the formula true and different generating colours.
    pub soundness_violations_colour: u64,
    /// Pairs with the formula true and the solver able to separate them.
    pub soundness_violations_oracle: u64,
    /// Pairs the solver calls forced that the generating colouring splits.
    pub oracle_inconsistent: u64,
    pub completeness_colour: Option<f64>,
    pub completeness_oracle: Option<f64>,
    pub seed: u64,
    pub spec_hash: String,
}

impl XiRow {
    pub fn violations(&self) -> u64 {
        self.soundness_violations_colour + self.soundness_violations_oracle + self.oracle_inconsistent
    }
}

fn rate(hits: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

/// One row per sampled structure for every rank in `ranks`.
pub fn check_xi_report(
    cfg: &SamplerConfig,
    ranks: RangeInclusive<u32>,
    xi: &dyn NativeRelation,
) -> Result<Vec<XiRow>> {
    let mut rows = Vec::new();
    for n in ranks {
        let sampler = Sampler::new(cfg, n)?;
        let part: Vec<Result<XiRow>> = (0..cfg.samples)
            .into_par_iter()
            .map(|i| check_one(&sampler, i, xi))
            .collect();
        for r in part {
            rows.push(r?);
        }
    }
    Ok(rows)
}

fn check_one(sampler: &Sampler, index: u64, xi: &dyn NativeRelation) -> Result<XiRow> {
    let m = sampler.sample(index);
    let rel = m.rel();
    let pg = rel.pg();
    let prepared = xi.prepare(rel)?;
    let (classes, _) = same_colour_classes(rel, sampler.l, sampler.sem)
        .map_err(|e| HarnessError::Invariant(format!("sample {index} at rank {}: {e}", pg.rank())))?;
    let mut class_of = vec![usize::MAX; pg.num_flats1()];
    for (k, block) in classes.iter().enumerate() {
        for f in block {
            class_of[f.idx()] = k;
        }
    }
    let pts: Vec<Point> = pg.points().filter(|&p| !pg.in_closure_of_empty(p)).collect();
    let mut row = XiRow {
        n: pg.rank(),
        sample: index,
        pairs: 0,
        xi_true: 0,
        colour_same: 0,
        oracle_same: 0,
        soundness_violations_colour: 0,
        soundness_violations_oracle: 0,
        oracle_inconsistent: 0,
        completeness_colour: None,
        completeness_oracle: None,
        seed: sampler.seed,
        spec_hash: String::new(),
    };
    let (mut hit_colour, mut hit_oracle) = (0, 0);
    for (i, &a) in pts.iter().enumerate() {
        let fa = pg.flat_of(a).expect("outside closure of empty set");
        for &b in &pts[i + 1..] {
            let fb = pg.flat_of(b).expect("outside closure of empty set");
            let x = prepared.holds(&[a, b]);
            let colour = m.colour_of_flat(fa) == m.colour_of_flat(fb);
            let oracle = class_of[fa.idx()] == class_of[fb.idx()];
            row.pairs += 1;
            row.xi_true += x as u64;
            row.colour_same += colour as u64;
            row.oracle_same += oracle as u64;
            row.soundness_violations_colour += (x && !colour) as u64;
            row.soundness_violations_oracle += (x && !oracle) as u64;
            row.oracle_inconsistent += (oracle && !colour) as u64;
            hit_colour += (x && colour) as u64;
            hit_oracle += (x && oracle) as u64;
        }
    }
    row.completeness_colour = rate(hit_colour, row.colour_same);
    row.completeness_oracle = rate(hit_oracle, row.oracle_same);
    Ok(row)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiSummary {
    pub n: u32,
    pub samples: u64,
    pub pairs: u64,
    pub xi_true: u64,
    pub soundness_violations: u64,
    pub completeness_colour: Option<f64>,
    pub completeness_oracle: Option<f64>,
}

/// Totals per rank; completeness rates are pooled over pairs.
pub fn summarize(rows: &[XiRow]) -> Vec<XiSummary> {
    let mut ranks: Vec<u32> = rows.iter().map(|r| r.n).collect();
    ranks.dedup();
    ranks
        .into_iter()
        .map(|n| {
            let rs: Vec<&XiRow> = rows.iter().filter(|r| r.n == n).collect();
            let sum = |f: &dyn Fn(&XiRow) -> u64| rs.iter().map(|r| f(r)).sum::<u64>();
            let pooled = |same: &dyn Fn(&XiRow) -> u64, rate: &dyn Fn(&XiRow) -> Option<f64>| {
                let total = sum(same);
                let hits: f64 = rs.iter().map(|r| rate(r).unwrap_or(0.0) * same(r) as f64).sum();
                (total > 0).then(|| hits / total as f64)
            };
            XiSummary {
                n,
                samples: rs.len() as u64,
                pairs: sum(&|r| r.pairs),
                xi_true: sum(&|r| r.xi_true),
                soundness_violations: sum(&|r| r.violations()),
                completeness_colour: pooled(&|r| r.colour_same, &|r| r.completeness_colour),
                completeness_oracle: pooled(&|r| r.oracle_same, &|r| r.completeness_oracle),
            }
        })
        .collect()
}
