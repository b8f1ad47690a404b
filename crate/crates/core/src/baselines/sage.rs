//! GraphSAGE (mean aggregator, full neighborhoods):
//! `h'_v = σ(W_self h_v + W_neigh · mean_{u ∈ N(v) \ {v}} h_u)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::param::{glorot_bound, uniform_fill, Activation, Trainable};
use crate::scalar::Scalar;
use crate::tensor::{axpy, Matrix};

#[derive(Clone, Debug)]
pub struct SageCache<T> {
    input: Matrix<T>,
    neighbor_mean: Matrix<T>,
    pre_activation: Matrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SageLayer<T> {
    pub w_self: Matrix<T>,
    pub w_neigh: Matrix<T>,
    pub grad_self: Matrix<T>,
    pub grad_neigh: Matrix<T>,
    activation: Activation,
}

/// Mean of each node's neighbors with the self-loop skipped; zero for isolated nodes.
fn neighbor_mean<T: Scalar>(g: &Graph<T>, h: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for v in 0..g.num_nodes() {
        let deg = g.degree(v);
        if deg == 0 {
            continue;
        }
        let w = T::one() / T::lit(deg as f64);
        for &u in g.neighbors(v).iter().filter(|&&u| u != v) {
            axpy(w, h.row(u), out.row_mut(v));
        }
    }
    out
}

impl<T: Scalar> SageLayer<T> {
    pub fn new(w_self: Matrix<T>, w_neigh: Matrix<T>, activation: Activation) -> Result<Self> {
        if w_self.shape() != w_neigh.shape() {
            return Err(Error::Dimension {
                op: "SageLayer::new",
                left: w_self.shape(),
                right: w_neigh.shape(),
            });
        }
        let (r, c) = w_self.shape();
        Ok(Self {
            w_self,
            w_neigh,
            grad_self: Matrix::zeros(r, c),
            grad_neigh: Matrix::zeros(r, c),
            activation,
        })
    }

    pub fn init<R: Rng>(d_in: usize, d_out: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = glorot_bound(d_in, d_out);
        let mut ws = Matrix::zeros(d_out, d_in);
        uniform_fill(ws.as_mut_slice(), bound, rng);
        let mut wn = Matrix::zeros(d_out, d_in);
        uniform_fill(wn.as_mut_slice(), bound, rng);
        Self::new(ws, wn, activation).expect("equal shapes")
    }

    pub fn input_dim(&self) -> usize {
        self.w_self.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w_self.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn forward(&self, g: &Graph<T>, h: &Matrix<T>) -> Result<(Matrix<T>, SageCache<T>)> {
        if h.cols() != self.input_dim() || h.rows() != g.num_nodes() {
            return Err(Error::Dimension {
                op: "sage_layer_forward",
                left: h.shape(),
                right: (g.num_nodes(), self.input_dim()),
            });
        }
        let mean = neighbor_mean(g, h);
        let mut pre = h.matmul_transposed(&self.w_self)?;
        pre.add_assign(&mean.matmul_transposed(&self.w_neigh)?)?;
        let out = self.activation.forward(&pre);
        Ok((
            out,
            SageCache {
                input: h.clone(),
                neighbor_mean: mean,
                pre_activation: pre,
            },
        ))
    }

    pub fn backward(&mut self, cache: &SageCache<T>, g: &Graph<T>, d_out: &Matrix<T>) -> Result<Matrix<T>> {
        if d_out.shape() != cache.pre_activation.shape() || cache.input.rows() != g.num_nodes() {
            return Err(Error::Dimension {
                op: "sage_layer_backward",
                left: d_out.shape(),
                right: cache.pre_activation.shape(),
            });
        }
        let d_pre = self.activation.backward(&cache.pre_activation, d_out);
        self.grad_self.add_assign(&d_pre.transposed_matmul(&cache.input)?)?;
        self.grad_neigh
            .add_assign(&d_pre.transposed_matmul(&cache.neighbor_mean)?)?;
        let mut d_in = d_pre.matmul(&self.w_self)?;
        let d_mean = d_pre.matmul(&self.w_neigh)?;
        // Transpose of the mean aggregation: node v's gradient spreads to its neighbors.
        for v in 0..g.num_nodes() {
            let deg = g.degree(v);
            if deg == 0 {
                continue;
            }
            let w = T::one() / T::lit(deg as f64);
            for &u in g.neighbors(v).iter().filter(|&&u| u != v) {
                axpy(w, d_mean.row(v), d_in.row_mut(u));
            }
        }
        Ok(d_in)
    }
}

impl<T: Scalar> Trainable<T> for SageLayer<T> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        f(self.w_self.as_mut_slice(), self.grad_self.as_mut_slice());
        f(self.w_neigh.as_mut_slice(), self.grad_neigh.as_mut_slice());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn graph() -> Graph<f64> {
        let edges: Vec<Edge> = vec![(0, 1), (1, 2), (1, 3)];
        let feats = Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0], [3.0, 1.0], [-1.0, 1.0], [5.0, 5.0]]).unwrap();
        Graph::from_edges(5, &edges, feats, None).unwrap().add_self_loops()
    }

    #[test]
    fn self_only_is_identity() {
        let g = graph();
        let layer = SageLayer::new(Matrix::identity(2), Matrix::zeros(2, 2), Activation::Identity).unwrap();
        let (out, _) = layer.forward(&g, g.features()).unwrap();
        assert_eq!(&out, g.features());
    }

    #[test]
    fn neighbor_only_is_mean_and_isolated_is_zero() {
        let g = graph();
        let layer = SageLayer::new(Matrix::zeros(2, 2), Matrix::identity(2), Activation::Identity).unwrap();
        let (out, _) = layer.forward(&g, g.features()).unwrap();
        assert_eq!(out.row(1), &[1.0, 2.0 / 3.0]);
        assert_eq!(out.row(0), &[0.0, 2.0]);
        assert_eq!(out.row(4), &[0.0, 0.0]);
    }
}
