//! Per-node graphlet orbit degrees by anchored subgraph sampling.
//!
//! The estimators are generic over the float type; the aliases below fix it
//! to `f64` (or `f32`). Selection probabilities are exact rationals
//! ([`sampler::SamplerBias`]).

pub mod estimator;
pub mod eval;
pub mod generate;
pub mod graph;
pub mod oracle;
pub mod orbit;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use estimator::{BudgetConfig, EstimateError, Scalar, Source, WeightRule};
pub use graph::{Direction, Graph, GraphError, NodeId};
pub use orbit::{DirectedOrbit, Orbit};
pub use report::Mode;
pub use rng::RandomSource;
pub use sampler::{AnchorSampler, Method, SampledCis};
pub use stats::NodeLocalStats;

pub type Estimate = estimator::Estimate<f64>;
pub type Estimate32 = estimator::Estimate<f32>;
pub type OrbitDegreeReport = report::OrbitDegreeReport<f64>;
pub type OrbitDegreeReport32 = report::OrbitDegreeReport<f32>;
pub type SandModel = estimator::SandModel<f64>;
