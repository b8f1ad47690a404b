//! Topological pair statistics: preferential attachment and the SVM's features.

use crate::error::Result;
use crate::graph::Graph;
use crate::scalar::Scalar;

/// `degree(u) · degree(v)`, self-loops excluded.
pub fn pa_score<T: Scalar>(g: &Graph<T>, u: usize, v: usize) -> Result<T> {
    g.check_node(u)?;
    g.check_node(v)?;
    Ok(T::lit((g.degree(u) * g.degree(v)) as f64))
}

/// Number of entries in the fixed feature layout of [`PairFeatures::to_vec`].
pub const PAIR_FEATURE_DIM: usize = 5;

/// Structural description of a node pair.
///
/// Computed with the pair's own edge (if any) masked out, so a training
/// positive looks the same as an unseen candidate link. Self-loops are ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairFeatures {
    pub common_neighbors: usize,
    pub jaccard: f64,
    pub pref_attachment: f64,
    /// Smaller of the two masked degrees.
    pub degree_u: usize,
    /// Larger of the two masked degrees.
    pub degree_v: usize,
}

impl PairFeatures {
    pub fn compute<T: Scalar>(g: &Graph<T>, u: usize, v: usize) -> Result<Self> {
        g.check_node(u)?;
        g.check_node(v)?;
        let keep_u = |&&x: &&usize| x != u && x != v;
        let nu: Vec<usize> = g.neighbors(u).iter().filter(keep_u).copied().collect();
        let nv: Vec<usize> = g.neighbors(v).iter().filter(keep_u).copied().collect();
        // Both lists are sorted: merge-count the intersection.
        let (mut i, mut j, mut common) = (0, 0, 0);
        while i < nu.len() && j < nv.len() {
            match nu[i].cmp(&nv[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let union = nu.len() + nv.len() - common;
        let jaccard = if union == 0 {
            0.0
        } else {
            common as f64 / union as f64
        };
        let (lo, hi) = if nu.len() <= nv.len() {
            (nu.len(), nv.len())
        } else {
            (nv.len(), nu.len())
        };
        Ok(Self {
            common_neighbors: common,
            jaccard,
            pref_attachment: (lo * hi) as f64,
            degree_u: lo,
            degree_v: hi,
        })
    }

    /// `[common_neighbors, jaccard, pref_attachment, min_degree, max_degree]`.
    pub fn to_vec<T: Scalar>(&self) -> Vec<T> {
        vec![
            T::lit(self.common_neighbors as f64),
            T::lit(self.jaccard),
            T::lit(self.pref_attachment),
            T::lit(self.degree_u as f64),
            T::lit(self.degree_v as f64),
        ]
    }
}
