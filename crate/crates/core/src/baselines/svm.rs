//! Linear SVM trained with Pegasos stochastic subgradient steps.
//!
//! The bias is folded in as a constant `1` feature, so it is regularized along
//! with the weights. At each epoch end the full-data objective is evaluated and
//! the best iterate so far is kept; the returned model is that iterate.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{self, Stream};
use crate::tensor::{dot, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            epochs: 200,
            seed: 0,
        }
    }
}

/// Per-column affine map to zero mean / unit variance, fitted on training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![T::zero(); dim],
            scale: vec![T::one(); dim],
        }
    }

    pub fn fit(x: &Matrix<T>) -> Self {
        let (n, d) = x.shape();
        let nf = T::lit(n.max(1) as f64);
        let mut mean = vec![T::zero(); d];
        let mut scale = vec![T::one(); d];
        for j in 0..d {
            mean[j] = (0..n).map(|i| x.get(i, j)).sum::<T>() / nf;
            let var = (0..n).map(|i| (x.get(i, j) - mean[j]).powi(2)).sum::<T>() / nf;
            if var > T::zero() {
                scale[j] = var.sqrt();
            }
        }
        Self { mean, scale }
    }

    pub fn apply(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvm<T> {
    pub weights: Vec<T>,
    pub bias: T,
    pub standardizer: Standardizer<T>,
}

impl<T: Scalar> LinearSvm<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            weights: vec![T::zero(); dim],
            bias: T::zero(),
            standardizer: Standardizer::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Decision value `w · standardize(x) + b` on raw features.
    pub fn decision(&self, raw: &[T]) -> Result<T> {
        if raw.len() != self.dim() {
            return Err(Error::Length {
                op: "LinearSvm::decision",
                left: raw.len(),
                right: self.dim(),
            });
        }
        Ok(dot(&self.weights, &self.standardizer.apply(raw)) + self.bias)
    }
}

#[derive(Clone, Debug)]
pub struct SvmFit<T> {
    pub model: LinearSvm<T>,
    /// Objective of the kept model at each epoch end; non-increasing.
    pub objective: Vec<T>,
}

/// `λ/2 (‖w‖² + b²) + mean_i max(0, 1 − y_i (w·z_i + b))` on standardized rows `z`.
pub fn svm_objective<T: Scalar>(weights: &[T], bias: T, z: &[Vec<T>], y: &[T], lambda: f64) -> T {
    let reg = T::lit(lambda / 2.0) * (dot(weights, weights) + bias * bias);
    let hinge: T = z
        .iter()
        .zip(y)
        .map(|(zi, &yi)| (T::one() - yi * (dot(weights, zi) + bias)).max(T::zero()))
        .sum();
    reg + hinge / T::lit(z.len() as f64)
}

/// Trains on raw feature rows `x` with boolean labels. Standardization statistics
/// come from `x` alone.
pub fn svm_train<T: Scalar>(x: &Matrix<T>, labels: &[bool], cfg: &SvmConfig) -> Result<SvmFit<T>> {
    if x.rows() != labels.len() {
        return Err(Error::Length {
            op: "svm_train",
            left: x.rows(),
            right: labels.len(),
        });
    }
    if !(labels.contains(&true) && labels.contains(&false)) {
        return Err(Error::SingleClass("svm_train"));
    }
    if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::invalid(format!("SVM lambda {} must be positive", cfg.lambda)));
    }
    let standardizer = Standardizer::fit(x);
    let z: Vec<Vec<T>> = (0..x.rows()).map(|i| standardizer.apply(x.row(i))).collect();
    let y: Vec<T> = labels
        .iter()
        .map(|&l| if l { T::one() } else { -T::one() })
        .collect();
    let d = x.cols();
    let lambda = T::lit(cfg.lambda);
    let radius = T::one() / lambda.sqrt();

    let mut w = vec![T::zero(); d];
    let mut b = T::zero();
    let mut best = (w.clone(), b, svm_objective(&w, b, &z, &y, cfg.lambda));
    let mut objective = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..z.len()).collect();
    let mut rng = seed::rng(cfg.seed, Stream::Svm, 0);
    let mut t = 0usize;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = T::one() / (lambda * T::lit(t as f64));
            let margin = y[i] * (dot(&w, &z[i]) + b);
            let shrink = T::one() - eta * lambda;
            w.iter_mut().for_each(|wj| *wj *= shrink);
            b *= shrink;
            if margin < T::one() {
                let step = eta * y[i];
                for (wj, &zj) in w.iter_mut().zip(&z[i]) {
                    *wj += step * zj;
                }
                b += step;
            }
            let norm = (dot(&w, &w) + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|wj| *wj *= s);
                b *= s;
            }
        }
        let current = svm_objective(&w, b, &z, &y, cfg.lambda);
        if !current.is_finite() {
            return Err(Error::NonFinite("svm_train"));
        }
        if current < best.2 {
            best = (w.clone(), b, current);
        }
        objective.push(best.2);
    }

    Ok(SvmFit {
        model: LinearSvm {
            weights: best.0,
            bias: best.1,
            standardizer,
        },
        objective,
    })
}
