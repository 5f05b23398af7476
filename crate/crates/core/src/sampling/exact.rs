use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::pregeometry::Pregeometry;
use crate::prob::Probability;
use crate::structures::{
    admissible_tuples, enumerate_coloured, reduct_dim, Colour, ColouredStructure, RelStructure, Semantics, Vocabulary,
};

/// A probability measure on a finite list of coloured structures.
#[derive(Debug, Clone)]
pub struct Measure<P> {
    pub structures: Vec<ColouredStructure>,
    pub probs: Vec<P>,
}

impl<P: Probability> Measure<P> {
    pub fn total(&self) -> P {
        self.probs.iter().cloned().fold(P::zero(), |a, b| a + b)
    }

    /// Mass of the structures satisfying `pred`.
    pub fn probability(&self, mut pred: impl FnMut(&ColouredStructure) -> bool) -> P {
        self.structures
            .iter()
            .zip(&self.probs)
            .filter(|(m, _)| pred(m))
            .fold(P::zero(), |a, (_, p)| a + p.clone())
    }

    /// Mass of the structures whose relational part satisfies `pred`.
    pub fn delta(&self, mut pred: impl FnMut(&RelStructure) -> bool) -> P {
        self.probability(|m| pred(m.rel()))
    }

    /// Probability of each distinct relational part, in first-seen order.
    pub fn pushforward(&self) -> Vec<(RelStructure, P)> {
        let mut index: HashMap<&RelStructure, usize> = HashMap::new();
        let mut out: Vec<(RelStructure, P)> = Vec::new();
        for (m, p) in self.structures.iter().zip(&self.probs) {
            match index.get(m.rel()) {
                Some(&i) => out[i].1 = out[i].1.clone() + p.clone(),
                None => {
                    index.insert(m.rel(), out.len());
                    out.push((m.rel().clone(), p.clone()));
                }
            }
        }
        out
    }
}

/// The measure built reduct by reduct: each `r`-dimensional reduct splits
/// its parent's mass evenly among the `r`-reducts that extend it.
pub fn exact_measure<P: Probability>(
    pg: &Arc<Pregeometry>,
    vocab: &Arc<Vocabulary>,
    l: Colour,
    sem: Semantics,
    cap: u128,
) -> Result<Measure<P>> {
    let structures = enumerate_coloured(pg, vocab, l, sem, cap)?;
    if structures.is_empty() {
        return Err(Error::domain("no structures to measure"));
    }
    let top = vocab.max_arity();
    // class_of[r][i] indexes the class of structure i at level r.
    let mut class_of: Vec<Vec<usize>> = Vec::new();
    for r in 0..=top {
        let mut ids: HashMap<ColouredStructure, usize> = HashMap::new();
        let row = structures
            .iter()
            .map(|m| {
                let next = ids.len();
                *ids.entry(reduct_dim(m, r)).or_insert(next)
            })
            .collect();
        class_of.push(row);
    }
    let mut mass: Vec<P> = vec![P::one()];
    for r in 1..=top as usize {
        let classes = class_of[r].iter().max().map_or(0, |m| m + 1);
        let mut parent = vec![usize::MAX; classes];
        for (i, &c) in class_of[r].iter().enumerate() {
            parent[c] = class_of[r - 1][i];
        }
        let mut children = vec![0u64; mass.len()];
        for &p in &parent {
            children[p] += 1;
        }
        mass = parent.iter().map(|&p| mass[p].clone() / P::from_count(children[p])).collect();
    }
    let probs = class_of[top as usize].iter().map(|&c| mass[c].clone()).collect();
    Ok(Measure { structures, probs })
}

/// `l^(-flats) · 2^(-admissible tuples)` for the colouring of `m`.
pub fn product_weight<P: Probability>(m: &ColouredStructure, sem: Semantics) -> Result<P> {
    let colours = m.colours().ok_or_else(|| Error::pre("structure has no colours"))?;
    let pg = m.pg();
    let vocab = m.vocab();
    let adm: usize = vocab
        .symbols()
        .iter()
        .map(|s| admissible_tuples(pg, s.arity, vocab.symmetric(), colours, sem).len())
        .sum();
    Ok(P::inv_pow(m.l() as u64, pg.num_flats1() as u64) * P::inv_pow(2, adm as u64))
}

/// The same structures weighted by the closed product form.
pub fn product_measure<P: Probability>(
    pg: &Arc<Pregeometry>,
    vocab: &Arc<Vocabulary>,
    l: Colour,
    sem: Semantics,
    cap: u128,
) -> Result<Measure<P>> {
    let structures = enumerate_coloured(pg, vocab, l, sem, cap)?;
    let probs = structures.iter().map(|m| product_weight(m, sem)).collect::<Result<Vec<P>>>()?;
    Ok(Measure { structures, probs })
}
