//! Undirected graphs with node features, stored as symmetric CSR adjacency.

mod florentine;
mod io;
mod sbm;
mod split;

pub use florentine::{florentine, florentine_edges_text, florentine_features_text};
pub use io::{load_edge_list, EdgeFormat};
pub use sbm::{generate_sbm, SbmParams};
pub use split::{sample_negatives, sample_non_edges, split_edges, EdgeSplit, SplitKind, SplitRatios};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// Node count at or below which missing features default to one-hot identity.
pub const ONE_HOT_LIMIT: usize = 64;

/// Canonical undirected edge, always `(min, max)`.
pub type Edge = (usize, usize);

pub fn canonical(u: usize, v: usize) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Immutable graph: `num_nodes × d` feature matrix plus symmetric CSR adjacency.
///
/// Each node's neighbor slice is strictly increasing. Self-loops only appear after
/// [`Graph::add_self_loops`]; degrees never count them.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    features: Matrix<T>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    names: Option<Vec<String>>,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph from undirected edges. Duplicates (in either orientation) collapse;
    /// self-loops are rejected.
    pub fn from_edges(
        num_nodes: usize,
        edges: &[Edge],
        features: Matrix<T>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(Error::InvalidNode { node, num_nodes });
                }
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop on node {u}")));
            }
        }
        Self::build(num_nodes, edges.iter().copied(), features, names)
    }

    fn build(
        num_nodes: usize,
        edges: impl Iterator<Item = Edge>,
        features: Matrix<T>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        if features.rows() != num_nodes {
            return Err(Error::Dimension {
                op: "Graph features",
                left: features.shape(),
                right: (num_nodes, features.cols()),
            });
        }
        if let Some(names) = &names {
            if names.len() != num_nodes {
                return Err(Error::Length {
                    op: "Graph names",
                    left: names.len(),
                    right: num_nodes,
                });
            }
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for (u, v) in edges {
            adj[u].push(v);
            if u != v {
                adj[v].push(u);
            }
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut list in adj {
            list.sort_unstable();
            list.dedup();
            targets.extend(list);
            offsets.push(targets.len());
        }
        Ok(Self {
            features,
            offsets,
            targets,
            names,
        })
    }

    /// Same nodes, features and names, restricted to `edges`.
    pub fn with_edges(&self, edges: &[Edge]) -> Result<Self> {
        Self::from_edges(
            self.num_nodes(),
            edges,
            self.features.clone(),
            self.names.clone(),
        )
    }

    pub fn with_features(mut self, features: Matrix<T>) -> Result<Self> {
        if features.rows() != self.num_nodes() {
            return Err(Error::Dimension {
                op: "Graph::with_features",
                left: features.shape(),
                right: (self.num_nodes(), features.cols()),
            });
        }
        self.features = features;
        Ok(self)
    }

    /// Returns a copy in which every node lists itself exactly once. Idempotent.
    pub fn add_self_loops(&self) -> Self {
        let n = self.num_nodes();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(self.targets.len() + n);
        offsets.push(0);
        for v in 0..n {
            let slice = self.neighbors(v);
            match slice.binary_search(&v) {
                Ok(_) => targets.extend_from_slice(slice),
                Err(pos) => {
                    targets.extend_from_slice(&slice[..pos]);
                    targets.push(v);
                    targets.extend_from_slice(&slice[pos..]);
                }
            }
            offsets.push(targets.len());
        }
        Self {
            features: self.features.clone(),
            offsets,
            targets,
            names: self.names.clone(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges, self-loops excluded.
    pub fn num_edges(&self) -> usize {
        let loops = (0..self.num_nodes()).filter(|&v| self.has_self_loop(v)).count();
        (self.targets.len() - loops) / 2
    }

    /// Sorted neighbor slice of `v` (includes `v` itself once self-loops are added).
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn has_self_loop(&self, v: usize) -> bool {
        self.neighbors(v).binary_search(&v).is_ok()
    }

    pub fn has_all_self_loops(&self) -> bool {
        (0..self.num_nodes()).all(|v| self.has_self_loop(v))
    }

    /// Degree excluding any self-loop.
    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len() - usize::from(self.has_self_loop(v))
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|v| self.degree(v)).collect()
    }

    /// Adjacency test; `has_edge(v, v)` is true only after self-loops are added.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes() && v < self.num_nodes() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Canonical `(u, v)` edges with `u < v`, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.targets.len() / 2);
        for u in 0..self.num_nodes() {
            out.extend(self.neighbors(u).iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Number of directed CSR entries.
    pub fn num_entries(&self) -> usize {
        self.targets.len()
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Display label: the node's name when present, else its index.
    pub fn label(&self, v: usize) -> String {
        match &self.names {
            Some(names) => names[v].clone(),
            None => v.to_string(),
        }
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.num_nodes() {
            Ok(())
        } else {
            Err(Error::InvalidNode {
                node: v,
                num_nodes: self.num_nodes(),
            })
        }
    }

    /// Standardizes each feature column to zero mean and unit variance.
    /// Constant columns are only centered.
    pub fn standardized(&self) -> Self {
        let mut features = self.features.clone();
        let n = features.rows();
        if n > 0 {
            let nf = T::lit(n as f64);
            for j in 0..features.cols() {
                let mean = (0..n).map(|i| features.get(i, j)).sum::<T>() / nf;
                let var = (0..n)
                    .map(|i| (features.get(i, j) - mean).powi(2))
                    .sum::<T>()
                    / nf;
                let sd = if var > T::zero() { var.sqrt() } else { T::one() };
                for i in 0..n {
                    features.set(i, j, (features.get(i, j) - mean) / sd);
                }
            }
        }
        Self {
            features,
            ..self.clone()
        }
    }
}

/// Features used when a dataset ships none: one-hot identity for small graphs,
/// otherwise `[degree, degree / max_degree]`.
pub fn default_features<T: Scalar>(num_nodes: usize, edges: &[Edge]) -> Matrix<T> {
    if num_nodes <= ONE_HOT_LIMIT {
        return Matrix::identity(num_nodes);
    }
    let mut deg = vec![0usize; num_nodes];
    let mut seen: Vec<Edge> = edges.iter().map(|&(u, v)| canonical(u, v)).collect();
    seen.sort_unstable();
    seen.dedup();
    for (u, v) in seen {
        deg[u] += 1;
        deg[v] += 1;
    }
    let max = deg.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut m = Matrix::zeros(num_nodes, 2);
    for (v, &d) in deg.iter().enumerate() {
        m.set(v, 0, T::lit(d as f64));
        m.set(v, 1, T::lit(d as f64 / max));
    }
    m
}
