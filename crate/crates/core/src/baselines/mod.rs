//! Comparison methods: preferential attachment, GCN, GraphSAGE and a linear
//! SVM over pair statistics. Decision trees are not provided.

pub mod gcn;
pub mod pair;
pub mod sage;
pub mod svm;

pub use gcn::{normalize_adjacency, GcnCache, GcnLayer, NormalizedAdjacency};
pub use pair::{pa_score, PairFeatures, PAIR_FEATURE_DIM};
pub use sage::{SageCache, SageLayer};
pub use svm::{svm_objective, svm_train, LinearSvm, Standardizer, SvmConfig, SvmFit};
