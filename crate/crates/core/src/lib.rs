pub mod bench;
pub mod error;
pub mod lrqaoa;
pub mod model;
pub mod qubo;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use qubo::{ExactQubo, Qubo};
pub use scalar::{Rational, Scalar};
pub use solvers::SampleSet;

pub type FloatQubo = Qubo<f64>;
pub type ExactSampleSet = SampleSet<Rational>;
pub type FloatSampleSet = SampleSet<f64>;
