//! The dimension conditional measure: exact at small size, sampled at any
//! size, and Monte Carlo estimates of event probabilities.
//!
//! Random streams come from ChaCha8. The key is derived from the run seed
//! and the rank with SplitMix64; the sample index selects the ChaCha stream.
//! Every sample therefore has its own counter-based stream, independent of
//! how samples are spread over threads.

mod exact;

use std::sync::Arc;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{evaluate, Assignment, EvalBudget, Formula};
use crate::pregeometry::{Family, FlatId, Pregeometry};
use crate::prob::{wilson, z95};
use crate::structures::{
    for_each_candidate_tuple, tuple_admissible, Colour, ColouredStructure, RelStructure, Semantics, Vocabulary,
};

pub use exact::{exact_measure, product_measure, product_weight, Measure};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub family: Family,
    pub rank: u32,
    pub vocab: Vocabulary,
    pub l: Colour,
    #[serde(default)]
    pub semantics: Semantics,
    pub seed: u64,
    pub samples: u64,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The stream for one sample.
pub fn sample_rng(seed: u64, rank: u32, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut s = splitmix(seed ^ splitmix(rank as u64 + 1));
    for chunk in key.chunks_mut(8) {
        s = splitmix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Draws one structure: uniform colours on the rank-1 flats, then a fair
/// coin for each admissible tuple (one per orbit in symmetric mode).
pub fn sample_coloured<R: Rng + ?Sized>(
    pg: &Arc<Pregeometry>,
    vocab: &Arc<Vocabulary>,
    l: Colour,
    sem: Semantics,
    rng: &mut R,
) -> ColouredStructure {
    let colours: Vec<Colour> = (0..pg.num_flats1()).map(|_| rng.gen_range(1..=l)).collect();
    let mut rel = RelStructure::empty(pg.clone(), vocab.clone());
    let mut flats: Vec<FlatId> = Vec::new();
    for (sym, s) in vocab.symbols().iter().enumerate() {
        let mut chosen = Vec::new();
        for_each_candidate_tuple(pg.universe_size(), s.arity, vocab.symmetric(), |t| {
            pg.flats_in_closure_into(t, &mut flats);
            if tuple_admissible(sem, &colours, &flats, t.iter().filter_map(|&p| pg.flat_of(p))) && rng.gen::<bool>() {
                chosen.push(t.to_vec());
            }
        });
        for t in chosen {
            rel.insert_rep(sym, t);
        }
    }
    ColouredStructure::new(rel, l, colours).expect("colouring covers all flats")
}

/// The structure with its colours forgotten.
pub fn sample_colourable<R: Rng + ?Sized>(
    pg: &Arc<Pregeometry>,
    vocab: &Arc<Vocabulary>,
    l: Colour,
    sem: Semantics,
    rng: &mut R,
) -> RelStructure {
    sample_coloured(pg, vocab, l, sem, rng).into_rel()
}

/// Indexed sampling at one rank.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub pg: Arc<Pregeometry>,
    pub vocab: Arc<Vocabulary>,
    pub l: Colour,
    pub sem: Semantics,
    pub seed: u64,
}

impl Sampler {
    pub fn new(cfg: &SamplerConfig, rank: u32) -> Result<Self> {
        if cfg.l < 1 {
            return Err(Error::pre("need at least one colour"));
        }
        Ok(Sampler {
            pg: Arc::new(cfg.family.build(rank)?),
            vocab: Arc::new(cfg.vocab.clone()),
            l: cfg.l,
            sem: cfg.semantics,
            seed: cfg.seed,
        })
    }

    pub fn sample(&self, index: u64) -> ColouredStructure {
        let mut rng = sample_rng(self.seed, self.pg.rank(), index);
        sample_coloured(&self.pg, &self.vocab, self.l, self.sem, &mut rng)
    }
}

/// A Monte Carlo (or exact) probability with its Wilson 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate<F> {
    pub event: String,
    pub n: u32,
    pub successes: u64,
    /// Samples whose event was decided.
    pub samples: u64,
    pub budget_exceeded: u64,
    pub estimate: F,
    pub ci_lo: F,
    pub ci_hi: F,
    pub seed: u64,
}

impl<F: Float> Estimate<F> {
    pub fn from_counts(event: &str, n: u32, successes: u64, samples: u64, budget_exceeded: u64, seed: u64) -> Self {
        let estimate = if samples == 0 {
            F::nan()
        } else {
            F::from(successes).unwrap() / F::from(samples).unwrap()
        };
        let (ci_lo, ci_hi) = wilson(successes, samples, z95());
        Estimate { event: event.to_string(), n, successes, samples, budget_exceeded, estimate, ci_lo, ci_hi, seed }
    }
}

type Predicate<'a> = dyn Fn(&ColouredStructure) -> Result<bool> + Sync + 'a;

/// An event decided on each sample.
pub enum Event<'a> {
    Predicate { name: String, test: Box<Predicate<'a>> },
    Sentence { name: String, formula: Formula, budget: EvalBudget },
}

impl Event<'_> {
    pub fn name(&self) -> &str {
        match self {
            Event::Predicate { name, .. } | Event::Sentence { name, .. } => name,
        }
    }

    fn decide(&self, m: &ColouredStructure) -> Result<bool> {
        match self {
            Event::Predicate { test, .. } => test(m),
            Event::Sentence { formula, budget, .. } => evaluate(m, formula, &Assignment::new(), budget),
        }
    }
}

/// Per-rank estimates of the event's probability. A sample whose evaluation
/// exceeds its budget is counted separately and left out of the estimate.
pub fn estimate_probability<F: Float + Send>(
    cfg: &SamplerConfig,
    event: &Event<'_>,
    ranks: impl IntoIterator<Item = u32>,
) -> Result<Vec<Estimate<F>>> {
    let mut out = Vec::new();
    for n in ranks {
        let sampler = Sampler::new(cfg, n)?;
        let results: Vec<Result<Option<bool>>> = (0..cfg.samples)
            .into_par_iter()
            .map(|i| match event.decide(&sampler.sample(i)) {
                Ok(b) => Ok(Some(b)),
                Err(Error::BudgetExceeded { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect();
        let mut successes = 0;
        let mut decided = 0;
        let mut exceeded = 0;
        for r in results {
            match r? {
                Some(b) => {
                    decided += 1;
                    successes += b as u64;
                }
                None => exceeded += 1,
            }
        }
        out.push(Estimate::from_counts(event.name(), n, successes, decided, exceeded, cfg.seed));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
