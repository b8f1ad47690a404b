//! Link scoring on node embeddings and the binary cross-entropy objective.

use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::param::{glorot_bound, uniform_fill, Trainable};
use crate::scalar::Scalar;
use crate::tensor::{axpy, dot, sigmoid, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScorerKind {
    Dot,
    HadamardLinear,
}

impl ScorerKind {
    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::Dot => "dot",
            ScorerKind::HadamardLinear => "hadamard_linear",
        }
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(ScorerKind::Dot),
            "hadamard_linear" => Ok(ScorerKind::HadamardLinear),
            other => Err(Error::invalid(format!(
                "unknown scorer `{other}` (expected dot or hadamard_linear)"
            ))),
        }
    }
}

/// Maps a pair of embeddings to a link logit. Both kinds are symmetric in the pair.
#[derive(Clone, Debug, PartialEq)]
pub enum LinkScorer<T> {
    /// `h_u · h_v`
    Dot,
    /// `w · (h_u ⊙ h_v) + b`
    HadamardLinear {
        weights: Vec<T>,
        bias: T,
        grad_weights: Vec<T>,
        grad_bias: T,
    },
}

impl<T: Scalar> LinkScorer<T> {
    pub fn hadamard(weights: Vec<T>, bias: T) -> Self {
        let grad_weights = vec![T::zero(); weights.len()];
        LinkScorer::HadamardLinear {
            weights,
            bias,
            grad_weights,
            grad_bias: T::zero(),
        }
    }

    /// Dot needs nothing; hadamard_linear draws `w` uniformly in `±sqrt(6/(d+1))`, `b = 0`.
    pub fn init<R: Rng>(kind: ScorerKind, dim: usize, rng: &mut R) -> Self {
        match kind {
            ScorerKind::Dot => LinkScorer::Dot,
            ScorerKind::HadamardLinear => {
                let mut w = vec![T::zero(); dim];
                uniform_fill(&mut w, glorot_bound(dim, 1), rng);
                Self::hadamard(w, T::zero())
            }
        }
    }

    pub fn kind(&self) -> ScorerKind {
        match self {
            LinkScorer::Dot => ScorerKind::Dot,
            LinkScorer::HadamardLinear { .. } => ScorerKind::HadamardLinear,
        }
    }

    fn check_dims(&self, a: usize, b: usize) -> Result<()> {
        let expected = match self {
            LinkScorer::Dot => a,
            LinkScorer::HadamardLinear { weights, .. } => weights.len(),
        };
        if a != b || a != expected {
            return Err(Error::Length {
                op: "score_link",
                left: a.max(b),
                right: expected.min(a.min(b)),
            });
        }
        Ok(())
    }

    pub fn score(&self, h_u: &[T], h_v: &[T]) -> Result<T> {
        self.check_dims(h_u.len(), h_v.len())?;
        Ok(match self {
            LinkScorer::Dot => dot(h_u, h_v),
            LinkScorer::HadamardLinear { weights, bias, .. } => {
                weights
                    .iter()
                    .zip(h_u.iter().zip(h_v))
                    .fold(T::zero(), |acc, (&w, (&a, &b))| acc + w * (a * b))
                    + *bias
            }
        })
    }

    pub fn score_pairs(&self, embeddings: &Matrix<T>, pairs: &[Edge]) -> Result<Vec<T>> {
        pairs
            .iter()
            .map(|&(u, v)| {
                for node in [u, v] {
                    if node >= embeddings.rows() {
                        return Err(Error::InvalidNode {
                            node,
                            num_nodes: embeddings.rows(),
                        });
                    }
                }
                self.score(embeddings.row(u), embeddings.row(v))
            })
            .collect()
    }

    /// Back-propagates `d_logits` into both endpoint embeddings; accumulates
    /// scorer gradients. Returns the gradient w.r.t. `embeddings`.
    pub fn backward_pairs(
        &mut self,
        embeddings: &Matrix<T>,
        pairs: &[Edge],
        d_logits: &[T],
    ) -> Result<Matrix<T>> {
        if pairs.len() != d_logits.len() {
            return Err(Error::Length {
                op: "LinkScorer::backward_pairs",
                left: pairs.len(),
                right: d_logits.len(),
            });
        }
        self.check_dims(embeddings.cols(), embeddings.cols())?;
        let mut d_emb = Matrix::zeros(embeddings.rows(), embeddings.cols());
        let dim = embeddings.cols();
        for (&(u, v), &g) in pairs.iter().zip(d_logits) {
            let (hu, hv) = (embeddings.row(u), embeddings.row(v));
            match self {
                LinkScorer::Dot => {
                    axpy(g, hv, d_emb.row_mut(u));
                    axpy(g, hu, d_emb.row_mut(v));
                }
                LinkScorer::HadamardLinear {
                    weights,
                    grad_weights,
                    grad_bias,
                    ..
                } => {
                    for i in 0..dim {
                        grad_weights[i] += g * hu[i] * hv[i];
                        let gw = g * weights[i];
                        d_emb.row_mut(u)[i] += gw * hv[i];
                        d_emb.row_mut(v)[i] += gw * hu[i];
                    }
                    *grad_bias += g;
                }
            }
        }
        Ok(d_emb)
    }
}

impl<T: Scalar> Trainable<T> for LinkScorer<T> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        if let LinkScorer::HadamardLinear {
            weights,
            bias,
            grad_weights,
            grad_bias,
        } = self
        {
            f(weights, grad_weights);
            f(std::slice::from_mut(bias), std::slice::from_mut(grad_bias));
        }
    }
}

/// Mean binary cross-entropy on logits and its gradient `(σ(z) − y) / n`.
///
/// Uses `max(z, 0) − z·y + ln(1 + e^{−|z|})`, which never overflows.
pub fn bce_loss<T: Scalar>(logits: &[T], labels: &[bool]) -> Result<(T, Vec<T>)> {
    if logits.is_empty() {
        return Err(Error::Empty("bce_loss"));
    }
    if logits.len() != labels.len() {
        return Err(Error::Length {
            op: "bce_loss",
            left: logits.len(),
            right: labels.len(),
        });
    }
    let n = T::lit(logits.len() as f64);
    let mut total = T::zero();
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &label) in logits.iter().zip(labels) {
        let y = if label { T::one() } else { T::zero() };
        total += z.max(T::zero()) - z * y + (-z.abs()).exp().ln_1p();
        grad.push((sigmoid(z) - y) / n);
    }
    let loss = total / n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("bce_loss"));
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{self, Stream};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn dot_examples() {
        let s = LinkScorer::<f64>::Dot;
        assert_eq!(s.score(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(s.score(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert!(s.score(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn hadamard_example_and_dim_check() {
        let s = LinkScorer::hadamard(vec![1.0, 2.0], 0.5);
        assert_eq!(s.score(&[1.0, 1.0], &[3.0, 4.0]).unwrap(), 3.0 + 8.0 + 0.5);
        assert!(s.score(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn bce_examples() {
        let (loss, grad) = bce_loss(&[0.0], &[true]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((grad[0] + 0.5).abs() < 1e-15);
        let (loss, _) = bce_loss(&[40.0], &[true]).unwrap();
        assert!(loss < 1e-12);
        let (loss, _) = bce_loss(&[-800.0, 800.0], &[false, true]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(bce_loss::<f64>(&[], &[]).is_err());
        assert!(bce_loss(&[0.0], &[true, false]).is_err());
    }

    #[test]
    fn bce_gradient_matches_central_differences() {
        let mut rng = seed::rng(11, Stream::Init, 0);
        for _ in 0..20 {
            let n = rng.random_range(1..10);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let y: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let (_, grad) = bce_loss(&z, &y).unwrap();
            let eps = 1e-6;
            for i in 0..n {
                let mut zp = z.clone();
                zp[i] += eps;
                let mut zm = z.clone();
                zm[i] -= eps;
                let fd = (bce_loss(&zp, &y).unwrap().0 - bce_loss(&zm, &y).unwrap().0) / (2.0 * eps);
                let rel = (fd - grad[i]).abs() / grad[i].abs().max(1e-12);
                assert!(rel < 1e-6, "fd {fd} analytic {}", grad[i]);
            }
        }
    }

    #[test]
    fn scorer_backward_matches_central_differences() {
        let mut rng = seed::rng(12, Stream::Init, 0);
        let mut emb = Matrix::zeros(5, 3);
        uniform_fill(emb.as_mut_slice(), 1.0, &mut rng);
        let pairs = vec![(0, 1), (1, 2), (3, 4), (0, 4), (2, 2)];
        let weights: Vec<f64> = (0..pairs.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for kind in [ScorerKind::Dot, ScorerKind::HadamardLinear] {
            let mut scorer = LinkScorer::<f64>::init(kind, 3, &mut rng);
            let objective = |s: &LinkScorer<f64>, e: &Matrix<f64>| -> f64 {
                s.score_pairs(e, &pairs).unwrap().iter().zip(&weights).map(|(a, b)| a * b).sum()
            };
            let d_emb = scorer.backward_pairs(&emb, &pairs, &weights).unwrap();
            let eps = 1e-6;
            for i in 0..emb.as_slice().len() {
                let mut p = emb.clone();
                p.as_mut_slice()[i] += eps;
                let mut m = emb.clone();
                m.as_mut_slice()[i] -= eps;
                let fd = (objective(&scorer, &p) - objective(&scorer, &m)) / (2.0 * eps);
                assert!((fd - d_emb.as_slice()[i]).abs() < 1e-7);
            }
            if let LinkScorer::HadamardLinear { grad_bias, .. } = &scorer {
                assert!((grad_bias - weights.iter().sum::<f64>()).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn scores_are_symmetric(seed in any::<u64>(), dim in 1usize..8) {
            let mut rng = seed::rng(seed, Stream::Init, 0);
            let hu: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let hv: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            for kind in [ScorerKind::Dot, ScorerKind::HadamardLinear] {
                let s = LinkScorer::init(kind, dim, &mut rng);
                prop_assert_eq!(s.score(&hu, &hv).unwrap(), s.score(&hv, &hu).unwrap());
            }
        }

        #[test]
        fn bce_nonnegative_and_permutation_invariant(z in prop::collection::vec(-50.0f64..50.0, 1..20), seed in any::<u64>()) {
            let mut rng = seed::rng(seed, Stream::Init, 1);
            let y: Vec<bool> = z.iter().map(|_| rng.random()).collect();
            let (loss, _) = bce_loss(&z, &y).unwrap();
            prop_assert!(loss >= 0.0);
            let mut idx: Vec<usize> = (0..z.len()).collect();
            idx.reverse();
            let zr: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
            let yr: Vec<bool> = idx.iter().map(|&i| y[i]).collect();
            let (loss_r, _) = bce_loss(&zr, &yr).unwrap();
            prop_assert!((loss - loss_r).abs() <= 1e-12 * loss.max(1.0));
        }

        #[test]
        fn dot_scaling_scales_logits_quadratically(seed in any::<u64>(), s in 0.1f64..10.0) {
            let mut rng = seed::rng(seed, Stream::Init, 2);
            let hu: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let hv: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scorer = LinkScorer::Dot;
            let base = scorer.score(&hu, &hv).unwrap();
            let su: Vec<f64> = hu.iter().map(|x| x * s).collect();
            let sv: Vec<f64> = hv.iter().map(|x| x * s).collect();
            let scaled = scorer.score(&su, &sv).unwrap();
            prop_assert!((scaled - s * s * base).abs() <= 1e-10 * (1.0 + scaled.abs()));
        }
    }
}
