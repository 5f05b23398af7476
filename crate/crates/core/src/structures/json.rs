use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Colour, ColouredStructure, RelStructure, Symbol, Vocabulary};
use crate::error::{Error, Result};
use crate::pregeometry::{Kind, Point, Pregeometry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatColour {
    pub basis: Vec<u64>,
    pub colour: Colour,
}

/// On-disk form of a structure. Relations in symmetric mode list one
/// sorted representative per orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureJson {
    pub kind: Kind,
    pub q: u32,
    pub rank: u32,
    pub l: Colour,
    /// `ordered` or `symmetric-irreflexive`.
    pub mode: String,
    pub vocabulary: Vec<Symbol>,
    /// Absent for a structure whose colours are not interpreted.
    pub colours: Option<Vec<FlatColour>>,
    pub relations: BTreeMap<String, Vec<Vec<u32>>>,
}

const ORDERED: &str = "ordered";
const SYMMETRIC: &str = "symmetric-irreflexive";

impl StructureJson {
    pub fn from_structure(m: &ColouredStructure) -> Self {
        let pg = m.pg();
        let vocab = m.vocab();
        let colours = m.colours().map(|cols| {
            pg.one_dim_flats()
                .iter()
                .zip(cols)
                .map(|(f, &c)| FlatColour { basis: f.basis().to_vec(), colour: c })
                .collect()
        });
        let relations = vocab
            .symbols()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let ts = m.rel().stored(i).iter().map(|t| t.iter().map(|p| p.0).collect()).collect();
                (s.name.clone(), ts)
            })
            .collect();
        StructureJson {
            kind: pg.kind(),
            q: pg.q(),
            rank: pg.rank(),
            l: m.l(),
            mode: if vocab.symmetric() { SYMMETRIC } else { ORDERED }.to_string(),
            vocabulary: vocab.symbols().to_vec(),
            colours,
            relations,
        }
    }

    pub fn to_structure(&self) -> Result<ColouredStructure> {
        let symmetric = match self.mode.as_str() {
            ORDERED => false,
            SYMMETRIC => true,
            other => return Err(Error::pre(format!("unknown mode {other}"))),
        };
        let pg = Arc::new(Pregeometry::new(self.kind, self.q, self.rank)?);
        let vocab = Arc::new(Vocabulary::new(self.vocabulary.clone(), symmetric)?);
        let mut rel = RelStructure::empty(pg.clone(), vocab.clone());
        for (name, tuples) in &self.relations {
            let sym = vocab.index_of(name).ok_or_else(|| Error::pre(format!("unknown symbol {name}")))?;
            for t in tuples {
                let t: Vec<Point> = t.iter().map(|&p| Point(p)).collect();
                rel.insert(sym, &t)?;
            }
        }
        let Some(colours) = &self.colours else {
            return Ok(ColouredStructure::uncoloured(rel, self.l));
        };
        let mut cols = vec![0; pg.num_flats1()];
        for fc in colours {
            let id = pg
                .one_dim_flats()
                .iter()
                .position(|f| f.basis() == fc.basis.as_slice())
                .ok_or_else(|| Error::pre(format!("basis {:?} is not a rank-1 flat", fc.basis)))?;
            cols[id] = fc.colour;
        }
        ColouredStructure::new(rel, self.l, cols)
    }

    pub fn to_string_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
