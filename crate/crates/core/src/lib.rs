//! Graph-attention link prediction.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). The aliases at
//! the crate root fix the element type to `f64`, which is what the CLI and the
//! gradient checks use; `*32` aliases exist for single precision.

pub mod baselines;
pub mod error;
pub mod explain;
pub mod gat;
pub mod graph;
pub mod linkpred;
pub mod metrics;
pub mod model;
pub mod param;
pub mod persist;
pub mod scalar;
pub mod seed;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use param::{Activation, Trainable};
pub use scalar::Scalar;
pub use train::{Method, TrainConfig};

pub type Matrix = tensor::Matrix<f64>;
pub type Graph = graph::Graph<f64>;
pub type GatLayer = gat::GatLayer<f64>;
pub type LinkScorer = linkpred::LinkScorer<f64>;
pub type ModelParams = model::ModelParams<f64>;
pub type Predictor = train::Predictor<f64>;

pub type Matrix32 = tensor::Matrix<f32>;
pub type Graph32 = graph::Graph<f32>;
pub type ModelParams32 = model::ModelParams<f32>;
