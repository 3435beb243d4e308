//! Discrete lifting of complete Riemannian manifolds to proper isometric
//! embeddings.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod distance;
pub mod embed;
pub mod error;
pub mod fields;
pub mod generators;
pub mod io;
pub mod lift;
pub mod manifold;
pub mod pipeline;
pub mod refine;
pub mod smoothing;
pub mod surgery;
pub mod tensor;

pub use analytic::AnalyticMetric;
pub use error::{Error, Result};
pub use fields::{CovectorField, EmbeddingMap, MetricField, ScalarField};
pub use manifold::{Cell, ManifoldParts, SampledManifold};
pub use pipeline::{emit_plots, list_scenarios, run_scenario, scenario, RunOutput, RunReport, Scenario};
pub use tensor::SymTensor;
