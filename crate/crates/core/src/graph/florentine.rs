use super::{load_edge_list, EdgeFormat, Graph};
use crate::error::Result;
use crate::scalar::Scalar;

const EDGES: &str = include_str!("../../data/florentine_marriage.edges");
const FEATURES: &str = include_str!("../../data/florentine_attrs.features");

pub fn florentine_edges_text() -> &'static str {
    EDGES
}

pub fn florentine_features_text() -> &'static str {
    FEATURES
}

/// Padgett's Florentine marriage network (16 families, 20 ties) with the raw
/// wealth / council-seat attributes as node features.
pub fn florentine<T: Scalar>() -> Result<Graph<T>> {
    load_edge_list(
        &mut EDGES.as_bytes(),
        EdgeFormat::EdgeList,
        Some(&mut FEATURES.as_bytes()),
    )
}
