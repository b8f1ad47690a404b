//! Stacked encoders (GAT, GCN or GraphSAGE) plus a link scorer: the full set of
//! trainable parameters for one link-prediction model.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{normalize_adjacency, GcnCache, GcnLayer, NormalizedAdjacency, SageCache, SageLayer};
use crate::error::{Error, Result};
use crate::gat::{GatCache, GatLayer, HeadCombine, DEFAULT_SLOPE};
use crate::graph::{Edge, Graph};
use crate::linkpred::{bce_loss, LinkScorer, ScorerKind};
use crate::param::{Activation, Trainable};
use crate::scalar::Scalar;
use crate::seed::{self, Stream};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncoderKind {
    Gat,
    Gcn,
    Sage,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Gat => "gat",
            EncoderKind::Gcn => "gcn",
            EncoderKind::Sage => "sage",
        }
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gat" => Ok(EncoderKind::Gat),
            "gcn" => Ok(EncoderKind::Gcn),
            "sage" => Ok(EncoderKind::Sage),
            other => Err(Error::invalid(format!("unknown encoder `{other}`"))),
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape of a model. `dims[0]` is the input feature dimension and `dims[i + 1]`
/// the (per-head) output width of layer `i`. Hidden layers use LeakyReLU, the
/// last layer is linear. With `heads > 1`, hidden GAT layers concatenate heads
/// and the last one averages them.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub encoder: EncoderKind,
    pub dims: Vec<usize>,
    pub heads: usize,
    pub slope: f64,
    pub scorer: ScorerKind,
}

impl Architecture {
    /// Two layers of width 16, one head, dot-product scorer.
    pub fn new(encoder: EncoderKind, input_dim: usize) -> Self {
        Self {
            encoder,
            dims: vec![input_dim, 16, 16],
            heads: 1,
            slope: DEFAULT_SLOPE,
            scorer: ScorerKind::Dot,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn embedding_dim(&self) -> usize {
        *self.dims.last().unwrap_or(&0)
    }

    fn heads_for(&self) -> usize {
        match self.encoder {
            EncoderKind::Gat => self.heads,
            _ => 1,
        }
    }

    /// Input width of layer `i`.
    fn layer_input(&self, i: usize) -> usize {
        if i == 0 {
            self.dims[0]
        } else {
            self.dims[i] * self.heads_for()
        }
    }

    fn activation(&self, i: usize) -> Activation {
        if i + 1 == self.num_layers() {
            Activation::Identity
        } else {
            Activation::LeakyRelu { slope: self.slope }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers() == 0 {
            return Err(Error::invalid("architecture needs at least one layer"));
        }
        if self.dims.contains(&0) {
            return Err(Error::invalid(format!("layer widths must be positive: {:?}", self.dims)));
        }
        if self.heads == 0 {
            return Err(Error::invalid("heads must be at least 1"));
        }
        if !(self.slope > 0.0 && self.slope < 1.0) {
            return Err(Error::invalid(format!("LeakyReLU slope {} not in (0, 1)", self.slope)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Encoder<T> {
    Gat(Vec<GatLayer<T>>),
    Gcn(Vec<GcnLayer<T>>),
    Sage(Vec<SageLayer<T>>),
}

impl<T: Scalar> Encoder<T> {
    pub fn kind(&self) -> EncoderKind {
        match self {
            Encoder::Gat(_) => EncoderKind::Gat,
            Encoder::Gcn(_) => EncoderKind::Gcn,
            Encoder::Sage(_) => EncoderKind::Sage,
        }
    }

    /// `(input, output)` width of every layer.
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        match self {
            Encoder::Gat(ls) => ls.iter().map(|l| (l.input_dim(), l.output_dim())).collect(),
            Encoder::Gcn(ls) => ls.iter().map(|l| (l.input_dim(), l.output_dim())).collect(),
            Encoder::Sage(ls) => ls.iter().map(|l| (l.input_dim(), l.output_dim())).collect(),
        }
    }

    fn visit(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        match self {
            Encoder::Gat(ls) => ls.iter_mut().for_each(|l| l.visit_params(f)),
            Encoder::Gcn(ls) => ls.iter_mut().for_each(|l| l.visit_params(f)),
            Encoder::Sage(ls) => ls.iter_mut().for_each(|l| l.visit_params(f)),
        }
    }
}

/// Per-layer caches from one encoder forward pass.
#[derive(Clone, Debug)]
pub enum EncoderCache<T> {
    Gat(Vec<GatCache<T>>),
    Gcn(NormalizedAdjacency<T>, Vec<GcnCache<T>>),
    Sage(Vec<SageCache<T>>),
}

/// All trainable state of a link-prediction model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    arch: Architecture,
    encoder: Encoder<T>,
    scorer: LinkScorer<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// Seeded initialization: layers in order, then the scorer, from the init stream.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seed::rng(seed, Stream::Init, 0);
        let l = arch.num_layers();
        let encoder = match arch.encoder {
            EncoderKind::Gat => Encoder::Gat(
                (0..l)
                    .map(|i| {
                        let combine = if i + 1 == l {
                            HeadCombine::Mean
                        } else {
                            HeadCombine::Concat
                        };
                        GatLayer::init(
                            arch.layer_input(i),
                            arch.dims[i + 1],
                            arch.heads,
                            combine,
                            arch.activation(i),
                            arch.slope,
                            &mut rng,
                        )
                    })
                    .collect::<Result<_>>()?,
            ),
            EncoderKind::Gcn => Encoder::Gcn(
                (0..l)
                    .map(|i| GcnLayer::init(arch.layer_input(i), arch.dims[i + 1], arch.activation(i), &mut rng))
                    .collect(),
            ),
            EncoderKind::Sage => Encoder::Sage(
                (0..l)
                    .map(|i| SageLayer::init(arch.layer_input(i), arch.dims[i + 1], arch.activation(i), &mut rng))
                    .collect(),
            ),
        };
        let scorer = LinkScorer::init(arch.scorer, arch.embedding_dim(), &mut rng);
        Self::from_parts(arch.clone(), encoder, scorer)
    }

    /// Assembles a model, checking that layer widths chain and match `arch`.
    pub fn from_parts(arch: Architecture, encoder: Encoder<T>, scorer: LinkScorer<T>) -> Result<Self> {
        arch.validate()?;
        if encoder.kind() != arch.encoder {
            return Err(Error::invalid(format!(
                "encoder is {} but architecture says {}",
                encoder.kind(),
                arch.encoder
            )));
        }
        let dims = encoder.layer_dims();
        if dims.len() != arch.num_layers() {
            return Err(Error::invalid(format!(
                "architecture has {} layers, encoder has {}",
                arch.num_layers(),
                dims.len()
            )));
        }
        let mut expected_in = arch.input_dim();
        for (i, &(d_in, d_out)) in dims.iter().enumerate() {
            if d_in != expected_in {
                return Err(Error::invalid(format!(
                    "layer {i} expects input width {d_in}, previous layer produces {expected_in}"
                )));
            }
            expected_in = d_out;
        }
        if expected_in != arch.embedding_dim() {
            return Err(Error::invalid(format!(
                "final layer width {expected_in} differs from declared embedding width {}",
                arch.embedding_dim()
            )));
        }
        if scorer.kind() != arch.scorer {
            return Err(Error::invalid("scorer kind differs from the architecture"));
        }
        if let LinkScorer::HadamardLinear { weights, .. } = &scorer {
            if weights.len() != expected_in {
                return Err(Error::invalid(format!(
                    "scorer width {} differs from embedding width {expected_in}",
                    weights.len()
                )));
            }
        }
        Ok(Self { arch, encoder, scorer })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn encoder(&self) -> &Encoder<T> {
        &self.encoder
    }

    pub fn encoder_mut(&mut self) -> &mut Encoder<T> {
        &mut self.encoder
    }

    pub fn scorer(&self) -> &LinkScorer<T> {
        &self.scorer
    }

    pub fn scorer_mut(&mut self) -> &mut LinkScorer<T> {
        &mut self.scorer
    }

    /// Runs every layer in order on the message-passing graph `g` (self-loops required).
    pub fn encode(&self, g: &Graph<T>, x: &Matrix<T>) -> Result<(Matrix<T>, EncoderCache<T>)> {
        match &self.encoder {
            Encoder::Gat(layers) => {
                let mut h = x.clone();
                let mut caches = Vec::with_capacity(layers.len());
                for layer in layers {
                    let (next, cache) = layer.forward(g, &h)?;
                    caches.push(cache);
                    h = next;
                }
                Ok((h, EncoderCache::Gat(caches)))
            }
            Encoder::Gcn(layers) => {
                let adj = normalize_adjacency(g)?;
                let mut h = x.clone();
                let mut caches = Vec::with_capacity(layers.len());
                for layer in layers {
                    let (next, cache) = layer.forward(&adj, &h)?;
                    caches.push(cache);
                    h = next;
                }
                Ok((h, EncoderCache::Gcn(adj, caches)))
            }
            Encoder::Sage(layers) => {
                let mut h = x.clone();
                let mut caches = Vec::with_capacity(layers.len());
                for layer in layers {
                    let (next, cache) = layer.forward(g, &h)?;
                    caches.push(cache);
                    h = next;
                }
                Ok((h, EncoderCache::Sage(caches)))
            }
        }
    }

    /// Embeddings of `g`'s own features.
    pub fn embed(&self, g: &Graph<T>) -> Result<Matrix<T>> {
        let (h, _) = self.encode(g, g.features())?;
        if !h.is_finite() {
            return Err(Error::NonFinite("encoder output"));
        }
        Ok(h)
    }

    /// Back-propagates `d_emb` through the encoder, accumulating layer gradients.
    /// Returns the gradient with respect to the encoder input.
    pub fn backward_encoder(&mut self, cache: &EncoderCache<T>, g: &Graph<T>, d_emb: &Matrix<T>) -> Result<Matrix<T>> {
        let mismatch = || Error::CacheMismatch("cache was produced by a different encoder".into());
        let mut grad = d_emb.clone();
        match (&mut self.encoder, cache) {
            (Encoder::Gat(layers), EncoderCache::Gat(caches)) if layers.len() == caches.len() => {
                for (layer, c) in layers.iter_mut().zip(caches).rev() {
                    grad = layer.backward(c, g, &grad)?;
                }
            }
            (Encoder::Gcn(layers), EncoderCache::Gcn(adj, caches)) if layers.len() == caches.len() => {
                for (layer, c) in layers.iter_mut().zip(caches).rev() {
                    grad = layer.backward(c, adj, &grad)?;
                }
            }
            (Encoder::Sage(layers), EncoderCache::Sage(caches)) if layers.len() == caches.len() => {
                for (layer, c) in layers.iter_mut().zip(caches).rev() {
                    grad = layer.backward(c, g, &grad)?;
                }
            }
            _ => return Err(mismatch()),
        }
        Ok(grad)
    }

    /// Link logits for `pairs` given precomputed embeddings.
    pub fn score_pairs(&self, embeddings: &Matrix<T>, pairs: &[Edge]) -> Result<Vec<T>> {
        self.scorer.score_pairs(embeddings, pairs)
    }

    /// Mean BCE of the labeled pairs; gradients are reset and then filled in.
    pub fn loss_and_gradient(&mut self, g: &Graph<T>, pairs: &[Edge], labels: &[bool]) -> Result<T> {
        self.zero_grad();
        let (emb, cache) = self.encode(g, g.features())?;
        let logits = self.scorer.score_pairs(&emb, pairs)?;
        let (loss, d_logits) = bce_loss(&logits, labels)?;
        let d_emb = self.scorer.backward_pairs(&emb, pairs, &d_logits)?;
        self.backward_encoder(&cache, g, &d_emb)?;
        Ok(loss)
    }

    /// Mean BCE only.
    pub fn loss(&self, g: &Graph<T>, pairs: &[Edge], labels: &[bool]) -> Result<T> {
        let emb = self.embed(g)?;
        let logits = self.scorer.score_pairs(&emb, pairs)?;
        Ok(bce_loss(&logits, labels)?.0)
    }

    /// Flattened parameter values in visiting order.
    pub fn flat_params(&mut self) -> Vec<T> {
        let mut out = Vec::new();
        self.visit_params(&mut |p, _| out.extend_from_slice(p));
        out
    }

    /// Flattened gradients in visiting order.
    pub fn flat_grads(&mut self) -> Vec<T> {
        let mut out = Vec::new();
        self.visit_params(&mut |_, g| out.extend_from_slice(g));
        out
    }

    /// Overwrites parameters from a flat vector in visiting order.
    pub fn set_flat_params(&mut self, values: &[T]) -> Result<()> {
        let total = self.num_params();
        if values.len() != total {
            return Err(Error::Length {
                op: "set_flat_params",
                left: values.len(),
                right: total,
            });
        }
        let mut offset = 0;
        self.visit_params(&mut |p, _| {
            p.copy_from_slice(&values[offset..offset + p.len()]);
            offset += p.len();
        });
        Ok(())
    }

    pub fn is_finite(&mut self) -> bool {
        self.flat_params().iter().all(|x| x.is_finite())
    }
}

impl<T: Scalar> Trainable<T> for ModelParams<T> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        self.encoder.visit(f);
        self.scorer.visit_params(f);
    }
}
