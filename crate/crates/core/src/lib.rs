//! Multiscale analysis of weighted point measures: β-numbers, dyadic
//! lattices, corona decompositions, truncated and suppressed singular
//! integrals, and numerical checks of the associated inequalities.

pub mod beta;
pub mod corona;
pub mod error;
pub mod generate;
pub mod lattice;
pub mod measure;
pub mod operators;
pub mod pipeline;
pub mod verify;

pub use beta::{beta2, beta_p, condition_check, jones_integral, BetaResult, ConditionResult};
pub use corona::{build_corona, delta_mu, CoronaParams, CoronaTree, TreeGeometry};
pub use error::{Error, Result};
pub use lattice::{build_lattice, Cell, Lattice, LatticeParams};
pub use measure::{Ball, WeightedPointMeasure};
pub use operators::{BumpFamily, CZKernel, KernelKind};
pub use verify::{AnalysisReport, CheckRecord};
