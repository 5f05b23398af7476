//! Search for a small structure that needs all `l` colours.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{chromatic_min, ChromaticMin};
use crate::error::Result;
use crate::pregeometry::Family;
use crate::sampling::{sample_coloured, sample_rng};
use crate::structures::{Colour, RelStructure, Semantics, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct USearch {
    pub seed: u64,
    pub max_rank: u32,
    pub samples_per_rank: u64,
}

impl Default for USearch {
    fn default() -> Self {
        USearch { seed: 0, max_rank: 4, samples_per_rank: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct UFound {
    pub u: RelStructure,
    pub rank: u32,
    pub sample: u64,
}

/// The first sampled structure, by increasing rank, that is l-colourable
/// but not colourable with fewer colours.
pub fn find_u(
    family: Family,
    l: Colour,
    vocab: &Arc<Vocabulary>,
    sem: Semantics,
    search: USearch,
) -> Result<Option<UFound>> {
    for rank in 1..=search.max_rank {
        let pg = Arc::new(family.build(rank)?);
        for i in 0..search.samples_per_rank {
            let mut rng = sample_rng(search.seed, rank, i);
            let m = sample_coloured(&pg, vocab, l, sem, &mut rng).into_rel();
            if chromatic_min(&m, sem, l) == ChromaticMin::Exact(l) {
                return Ok(Some(UFound { u: m, rank, sample: i }));
            }
        }
    }
    Ok(None)
}
