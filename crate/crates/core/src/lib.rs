//! Random (strongly) l-colourable structures over finite pregeometries.
//!
//! * [`pregeometry`]: closure, rank, flats over prime fields.
//! * [`structures`]: relational and coloured structures, validity, reducts,
//!   embeddings, enumeration.
//! * [`colouring`]: constraint solving over rank-1 flats.
//! * [`logic`]: first-order formulas, evaluation and the formula builders.
//! * [`sampling`]: the dimension conditional measure, exact and sampled.

pub mod colouring;
pub mod error;
pub mod logic;
pub mod pregeometry;
pub mod prob;
pub mod sampling;
pub mod structures;

pub use error::{Error, Result};
pub use pregeometry::{Family, Flat, FlatId, Kind, Point, Pregeometry};

/// Exact probabilities.
pub type Rational = num_rational::BigRational;
/// Probability distribution over structures with exact weights.
pub type ExactMeasure = sampling::Measure<Rational>;
/// Probability distribution over structures with floating weights.
pub type FloatMeasure = sampling::Measure<f64>;
/// Monte Carlo estimate in double precision.
pub type Estimate64 = sampling::Estimate<f64>;
/// Monte Carlo estimate in single precision.
pub type Estimate32 = sampling::Estimate<f32>;
