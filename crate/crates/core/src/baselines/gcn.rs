//! Graph convolution baseline: `H' = σ(Â H Wᵀ)` with `Â = D^{-1/2}(A + I)D^{-1/2}`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::param::{glorot_bound, uniform_fill, Activation, Trainable};
use crate::scalar::Scalar;
use crate::tensor::{axpy, Matrix};

/// Symmetric normalized adjacency in CSR form, sharing the graph's sparsity pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency<T> {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> NormalizedAdjacency<T> {
    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `(column, value)` entries of row `v`.
    pub fn row(&self, v: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let n = self.num_nodes();
        let mut m = Matrix::zeros(n, n);
        for v in 0..n {
            for (u, x) in self.row(v) {
                m.set(v, u, x);
            }
        }
        m
    }

    /// `Â · h`.
    pub fn propagate(&self, h: &Matrix<T>) -> Result<Matrix<T>> {
        if h.rows() != self.num_nodes() {
            return Err(Error::Dimension {
                op: "NormalizedAdjacency::propagate",
                left: (self.num_nodes(), self.num_nodes()),
                right: h.shape(),
            });
        }
        let mut out = Matrix::zeros(h.rows(), h.cols());
        for v in 0..self.num_nodes() {
            for (u, x) in self.row(v) {
                axpy(x, h.row(u), out.row_mut(v));
            }
        }
        Ok(out)
    }
}

/// Requires self-loops, so the CSR already holds `A + I`.
pub fn normalize_adjacency<T: Scalar>(g: &Graph<T>) -> Result<NormalizedAdjacency<T>> {
    if !g.has_all_self_loops() {
        return Err(Error::invalid("normalize_adjacency: graph must contain self-loops"));
    }
    let n = g.num_nodes();
    let inv_sqrt: Vec<T> = (0..n)
        .map(|v| T::one() / T::lit(g.neighbors(v).len() as f64).sqrt())
        .collect();
    let mut values = Vec::with_capacity(g.num_entries());
    for v in 0..n {
        values.extend(g.neighbors(v).iter().map(|&u| inv_sqrt[v] * inv_sqrt[u]));
    }
    Ok(NormalizedAdjacency {
        offsets: g.offsets().to_vec(),
        targets: g.targets().to_vec(),
        values,
    })
}

#[derive(Clone, Debug)]
pub struct GcnCache<T> {
    /// `Â H`, the input to the linear map.
    propagated: Matrix<T>,
    pre_activation: Matrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnLayer<T> {
    pub weight: Matrix<T>,
    pub grad_weight: Matrix<T>,
    activation: Activation,
}

impl<T: Scalar> GcnLayer<T> {
    pub fn new(weight: Matrix<T>, activation: Activation) -> Self {
        let grad_weight = Matrix::zeros(weight.rows(), weight.cols());
        Self {
            weight,
            grad_weight,
            activation,
        }
    }

    pub fn init<R: Rng>(d_in: usize, d_out: usize, activation: Activation, rng: &mut R) -> Self {
        let mut w = Matrix::zeros(d_out, d_in);
        uniform_fill(w.as_mut_slice(), glorot_bound(d_in, d_out), rng);
        Self::new(w, activation)
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn forward(&self, adj: &NormalizedAdjacency<T>, h: &Matrix<T>) -> Result<(Matrix<T>, GcnCache<T>)> {
        if h.cols() != self.input_dim() {
            return Err(Error::Dimension {
                op: "gcn_layer_forward",
                left: h.shape(),
                right: self.weight.shape(),
            });
        }
        let propagated = adj.propagate(h)?;
        let pre = propagated.matmul_transposed(&self.weight)?;
        let out = self.activation.forward(&pre);
        Ok((
            out,
            GcnCache {
                propagated,
                pre_activation: pre,
            },
        ))
    }

    pub fn backward(&mut self, cache: &GcnCache<T>, adj: &NormalizedAdjacency<T>, d_out: &Matrix<T>) -> Result<Matrix<T>> {
        if d_out.shape() != cache.pre_activation.shape() || cache.propagated.rows() != adj.num_nodes() {
            return Err(Error::Dimension {
                op: "gcn_layer_backward",
                left: d_out.shape(),
                right: cache.pre_activation.shape(),
            });
        }
        let d_pre = self.activation.backward(&cache.pre_activation, d_out);
        self.grad_weight
            .add_assign(&d_pre.transposed_matmul(&cache.propagated)?)?;
        // Â is symmetric, so Âᵀ dP = Â dP.
        adj.propagate(&d_pre.matmul(&self.weight)?)
    }
}

impl<T: Scalar> Trainable<T> for GcnLayer<T> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        f(self.weight.as_mut_slice(), self.grad_weight.as_mut_slice());
    }
}
