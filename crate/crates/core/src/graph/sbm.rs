use rand::Rng;
use rand_distr::StandardNormal;

use super::{Edge, Graph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{self, Stream};
use crate::tensor::Matrix;

/// Stochastic block model with block-informative Gaussian features.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmParams {
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Scale of the block-indicator mean added to unit Gaussian noise.
    pub feature_signal: f64,
}

impl Default for SbmParams {
    fn default() -> Self {
        Self {
            blocks: 2,
            nodes_per_block: 50,
            p_in: 0.5,
            p_out: 0.05,
            feature_dim: 8,
            feature_signal: 1.0,
        }
    }
}

impl SbmParams {
    pub fn num_nodes(&self) -> usize {
        self.blocks * self.nodes_per_block
    }

    /// Nodes are numbered block by block.
    pub fn block_of(&self, v: usize) -> usize {
        v / self.nodes_per_block
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.nodes_per_block == 0 {
            return Err(Error::invalid("SBM needs at least one block and one node per block"));
        }
        if !(0.0 <= self.p_out && self.p_out <= self.p_in && self.p_in <= 1.0) {
            return Err(Error::invalid(format!(
                "SBM probabilities must satisfy 0 <= p_out ({}) <= p_in ({}) <= 1",
                self.p_out, self.p_in
            )));
        }
        if self.feature_dim < self.blocks {
            return Err(Error::invalid(format!(
                "feature_dim {} must be at least the number of blocks {}",
                self.feature_dim, self.blocks
            )));
        }
        if !self.feature_signal.is_finite() {
            return Err(Error::invalid("feature_signal must be finite"));
        }
        Ok(())
    }
}

/// Samples an SBM graph. Node `v` in block `b` gets features
/// `feature_signal * e_b + N(0, I)`.
pub fn generate_sbm<T: Scalar>(params: &SbmParams, seed: u64) -> Result<Graph<T>> {
    params.validate()?;
    let n = params.num_nodes();
    let mut rng = seed::rng(seed, Stream::Sbm, 0);
    let mut edges: Vec<Edge> = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if params.block_of(u) == params.block_of(v) {
                params.p_in
            } else {
                params.p_out
            };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let mut features = Matrix::zeros(n, params.feature_dim);
    for v in 0..n {
        let b = params.block_of(v);
        for (j, x) in features.row_mut(v).iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            let mean = if j == b { params.feature_signal } else { 0.0 };
            *x = T::lit(mean + noise);
        }
    }
    Graph::from_edges(n, &edges, features, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_limits_give_cliques() {
        let p = SbmParams {
            blocks: 2,
            nodes_per_block: 4,
            p_in: 1.0,
            p_out: 0.0,
            feature_dim: 2,
            feature_signal: 1.0,
        };
        let g: Graph<f64> = generate_sbm(&p, 1).unwrap();
        assert_eq!(g.num_edges(), 12);
        for (u, v) in g.edges() {
            assert_eq!(p.block_of(u), p.block_of(v));
        }
    }

    #[test]
    fn within_block_counts_near_binomial_mean() {
        let p = SbmParams {
            nodes_per_block: 50,
            ..SbmParams::default()
        };
        let pairs = 50.0 * 49.0 / 2.0;
        let mean = 0.5 * pairs;
        let sd = (pairs * 0.25f64).sqrt();
        for seed in 0..10 {
            let g: Graph<f64> = generate_sbm(&p, seed).unwrap();
            for block in 0..2 {
                let count = g
                    .edges()
                    .into_iter()
                    .filter(|&(u, v)| p.block_of(u) == block && p.block_of(v) == block)
                    .count() as f64;
                assert!((count - mean).abs() < 4.0 * sd, "seed {seed} block {block}: {count}");
            }
        }
    }

    #[test]
    fn zero_signal_features_are_block_blind() {
        let p = SbmParams {
            nodes_per_block: 100,
            feature_signal: 0.0,
            ..SbmParams::default()
        };
        for seed in 0..5 {
            let g: Graph<f64> = generate_sbm(&p, seed).unwrap();
            for j in 0..p.feature_dim {
                let mean = |b: usize| -> f64 {
                    (0..100).map(|i| g.features().get(b * 100 + i, j)).sum::<f64>() / 100.0
                };
                assert!((mean(0) - mean(1)).abs() < 0.5);
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let bad = SbmParams {
            p_in: 0.1,
            p_out: 0.2,
            ..SbmParams::default()
        };
        assert!(generate_sbm::<f64>(&bad, 0).is_err());
        let bad = SbmParams {
            feature_dim: 1,
            ..SbmParams::default()
        };
        assert!(generate_sbm::<f64>(&bad, 0).is_err());
    }
}
