//! Stochastic rounding emulation with summation and variance kernels, exact
//! rational oracles, closed-form forward-error bounds and a seeded Monte
//! Carlo harness.

pub mod algorithms;
pub mod bounds;
pub mod error;
pub mod fp;
pub mod harness;
pub mod oracle;
pub mod rng;

pub use algorithms::{Algorithm, SummationScheme, VarianceAlgorithm, VarianceKind};
pub use bounds::{BoundMethod, BoundQuery, BoundValue};
pub use error::{Error, Result};
pub use fp::{FpFormat, FpValue, Op, OpStats, RoundingContext, RoundingMode};
pub use oracle::{ConditionReport, ExactMoments, ExactValue};
pub use rng::StreamRng;
