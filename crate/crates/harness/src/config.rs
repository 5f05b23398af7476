//! Experiment configuration: loading, overrides and hashing.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use pregeomzol_core::colouring::USearch;
use pregeomzol_core::logic::EvalBudget;
use pregeomzol_core::sampling::SamplerConfig;
use pregeomzol_core::structures::{Colour, ColourRule, Semantics, Symbol, Vocabulary};
use pregeomzol_core::{Family, Kind};

use crate::error::{HarnessError, Result};

pub const ENV_MAX_CELLS: &str = "PREGEOMZOL_MAX_CELLS";
pub const ENV_MAX_ASSIGNMENTS: &str = "PREGEOMZOL_MAX_ASSIGNMENTS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Enumerate,
    Sample,
    CheckXi,
    ZeroOne,
    UniqueColouring,
    RamseyMinDim,
    ExtAxiom,
    FindU,
    Validate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Enumerate => "enumerate",
            ExperimentKind::Sample => "sample",
            ExperimentKind::CheckXi => "check-xi",
            ExperimentKind::ZeroOne => "zero-one",
            ExperimentKind::UniqueColouring => "unique-colouring",
            ExperimentKind::RamseyMinDim => "ramsey-min-dim",
            ExperimentKind::ExtAxiom => "ext-axiom",
            ExperimentKind::FindU => "find-u",
            ExperimentKind::Validate => "validate",
        }
    }
}

/// Resource caps. Environment variables override the file values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Bound on enumerated objects (structures, colourings, flats).
    #[serde(default = "default_max_cells")]
    pub max_cells: u64,
    /// Quantifier assignments per sentence evaluation.
    #[serde(default = "default_max_assignments")]
    pub max_assignments: u64,
}

fn default_max_cells() -> u64 {
    1 << 22
}

fn default_max_assignments() -> u64 {
    EvalBudget::default().max_assignments
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_cells: default_max_cells(), max_assignments: default_max_assignments() }
    }
}

impl Caps {
    pub fn budget(&self) -> EvalBudget {
        EvalBudget { max_assignments: self.max_assignments, ..EvalBudget::default() }
    }
}

/// Closed pairs `A ⊂ B` with a fixed meaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinPair {
    /// `A = closure(∅)`, `B` a line without relations.
    PointOverEmpty,
    /// `A = closure(v1)`, `B` the plane with the single tuple `R(v1, v2)`.
    TupleOverPoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSpec {
    #[serde(default)]
    pub builtin: Option<BuiltinPair>,
    /// Structure file for `B`.
    #[serde(default)]
    pub b: Option<PathBuf>,
    /// Points of `B` generating `A`, in digit notation.
    #[serde(default)]
    pub a: Vec<String>,
    #[serde(default)]
    pub max_colourings: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceSpec {
    pub name: String,
    /// S-expression text; `(def xi x y)` refers to the same-colour formula.
    #[serde(default)]
    pub formula: Option<String>,
    #[serde(default)]
    pub extension: Option<ExtensionSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_family")]
    pub family: Family,
    #[serde(default = "default_l")]
    pub l: Colour,
    #[serde(default)]
    pub strong: bool,
    #[serde(default)]
    pub colour_rule: ColourRule,
    #[serde(default)]
    pub symmetric_irreflexive: bool,
    #[serde(default = "default_symbols")]
    pub symbols: Vec<Symbol>,
    #[serde(default)]
    pub n_min: Option<u32>,
    #[serde(default)]
    pub n_max: Option<u32>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub sentences: Vec<SentenceSpec>,
    /// Structure files for `validate` and `ext-axiom`.
    #[serde(default)]
    pub structures: Vec<PathBuf>,
    #[serde(default)]
    pub extension: Option<ExtensionSpec>,
    /// Rank of the monochromatic flats avoided by `ramsey-min-dim`.
    #[serde(default)]
    pub target_rank: Option<u32>,
    #[serde(default)]
    pub max_nodes: Option<u64>,
    /// Ambient rank for the weak-case structure `B`.
    #[serde(default)]
    pub weak_b_rank: Option<u32>,
    #[serde(default)]
    pub search: Option<USearch>,
    /// Also write every enumerated structure.
    #[serde(default)]
    pub dump: bool,
    #[serde(default)]
    pub caps: Caps,
    /// Output directory; not part of the hash.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_family() -> Family {
    Family::linear(2)
}

fn default_l() -> Colour {
    2
}

fn default_symbols() -> Vec<Symbol> {
    vec![Symbol { name: "R".into(), arity: 2 }]
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "kind": kind })).expect("defaults deserialize")
    }

    pub fn semantics(&self) -> Semantics {
        Semantics::new(self.strong, self.colour_rule)
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        Ok(Vocabulary::new(self.symbols.clone(), self.symmetric_irreflexive)?)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| HarnessError::config(format!("{} needs a seed", self.kind.name())))
    }

    pub fn ranks(&self) -> Result<RangeInclusive<u32>> {
        match (self.n_min, self.n_max) {
            (Some(a), Some(b)) if a <= b => Ok(a..=b),
            (Some(a), Some(b)) => Err(HarnessError::config(format!("n_min {a} exceeds n_max {b}"))),
            (Some(a), None) | (None, Some(a)) => Ok(a..=a),
            (None, None) => Err(HarnessError::config(format!("{} needs n_min and n_max", self.kind.name()))),
        }
    }

    pub fn samples(&self) -> Result<u64> {
        self.samples.ok_or_else(|| HarnessError::config(format!("{} needs samples", self.kind.name())))
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let ranks = self.ranks()?;
        Ok(SamplerConfig {
            family: self.family,
            rank: *ranks.start(),
            vocab: self.vocabulary()?,
            l: self.l,
            semantics: self.semantics(),
            seed: self.seed()?,
            samples: self.samples()?,
        })
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut copy = self.clone();
        copy.out = None;
        let bytes = serde_json::to_vec(&copy).expect("spec serializes");
        hex(&Sha256::digest(bytes))
    }

    fn check(&self) -> Result<()> {
        if self.l < 1 {
            return Err(HarnessError::config("l must be at least 1"));
        }
        if self.family.kind != Kind::Trivial && self.family.q < 2 {
            return Err(HarnessError::config("field order q must be a prime"));
        }
        self.vocabulary()?;
        for s in &self.sentences {
            if s.formula.is_some() == s.extension.is_some() {
                return Err(HarnessError::config(format!(
                    "sentence {} needs exactly one of formula and extension",
                    s.name
                )));
            }
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.structures.iter_mut().for_each(fix);
        if let Some(b) = self.extension.as_mut().and_then(|e| e.b.as_mut()) {
            fix(b);
        }
        for s in &mut self.sentences {
            if let Some(b) = s.extension.as_mut().and_then(|e| e.b.as_mut()) {
                fix(b);
            }
        }
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Command-line settings applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub colour_rule: Option<ColourRule>,
    pub symmetric_irreflexive: bool,
    pub strong: bool,
    /// `key=value` pairs; dotted keys address nested tables.
    pub sets: Vec<String>,
}

fn read_tree(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        serde_json::from_str(&text).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
    }
}

fn parse_value(raw: &str) -> Value {
    #[derive(Deserialize)]
    struct Holder {
        v: Value,
    }
    match toml::from_str::<Holder>(&format!("v = {raw}")) {
        Ok(h) => h.v,
        Err(_) => Value::String(raw.to_string()),
    }
}

fn set_path(tree: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(HarnessError::config(format!("cannot set {key}: {part} is not a table")));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn env_cap(name: &str) -> Result<Option<u64>> {
    match std::env::var(name) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| HarnessError::config(format!("{name} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Reads the configuration (TOML, or JSON by extension), applies overrides
/// and environment caps, and checks the result.
pub fn load(kind: ExperimentKind, config: Option<&Path>, ov: &Overrides) -> Result<ExperimentSpec> {
    let mut tree = match config {
        Some(p) => read_tree(p)?,
        None => Value::Object(Default::default()),
    };
    let Value::Object(map) = &mut tree else {
        return Err(HarnessError::config("configuration must be a table"));
    };
    let name = serde_json::to_value(kind).expect("kind serializes");
    match map.get("kind") {
        Some(k) if *k != name => {
            return Err(HarnessError::config(format!("configuration is for {k}, not {}", kind.name())));
        }
        _ => {
            map.insert("kind".into(), name);
        }
    }
    for s in &ov.sets {
        let (k, v) = s.split_once('=').ok_or_else(|| HarnessError::config(format!("expected key=value, got {s:?}")))?;
        set_path(&mut tree, k.trim(), parse_value(v.trim()))?;
    }
    let mut spec: ExperimentSpec =
        serde_json::from_value(tree).map_err(|e| HarnessError::config(e.to_string()))?;
    if let Some(seed) = ov.seed {
        spec.seed = Some(seed);
    }
    if let Some(out) = &ov.out {
        spec.out = Some(out.clone());
    }
    if let Some(rule) = ov.colour_rule {
        spec.colour_rule = rule;
    }
    spec.symmetric_irreflexive |= ov.symmetric_irreflexive;
    spec.strong |= ov.strong;
    if let Some(c) = env_cap(ENV_MAX_CELLS)? {
        spec.caps.max_cells = c;
    }
    if let Some(c) = env_cap(ENV_MAX_ASSIGNMENTS)? {
        spec.caps.max_assignments = c;
    }
    let base = config.and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default();
    spec.resolve_paths(&base);
    spec.check()?;
    Ok(spec)
}
