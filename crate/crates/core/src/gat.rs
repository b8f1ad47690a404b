//! Graph attention layer with a hand-derived backward pass.
//!
//! For every destination `v` and neighbor `u ∈ N(v)` (self-loop included):
//!
//! ```text
//! z_u    = W h_u
//! e_vu   = LeakyReLU(a_dst · z_v + a_src · z_u)      // a = [a_dst || a_src]
//! α_vu   = softmax over u ∈ N(v) of e_vu
//! h'_v   = σ(Σ_u α_vu z_u)
//! ```
//!
//! The concatenated form `a · [z_v || z_u]` is evaluated as the sum of two dot
//! products, one per half of `a`. Attention is computed per directed CSR entry
//! in canonical order, so forward and backward are bit-deterministic.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::param::{glorot_bound, uniform_fill, Activation, Trainable};
use crate::scalar::Scalar;
use crate::tensor::{axpy, dot, leaky_relu_derivative, leaky_relu_scalar, offset_softmax, Matrix};

/// Default LeakyReLU slope for attention logits and hidden activations.
pub const DEFAULT_SLOPE: f64 = 0.2;

/// Attention logits are clamped to this magnitude before the softmax.
pub const LOGIT_CLAMP: f64 = 50.0;

/// How multiple heads are merged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadCombine {
    Concat,
    Mean,
}

/// One attention head: projection `W` (`d_out × d_in`) and attention vector `a` (`2·d_out`).
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionHead<T> {
    pub weight: Matrix<T>,
    pub attention: Vec<T>,
    pub grad_weight: Matrix<T>,
    pub grad_attention: Vec<T>,
}

impl<T: Scalar> AttentionHead<T> {
    pub fn new(weight: Matrix<T>, attention: Vec<T>) -> Result<Self> {
        if attention.len() != 2 * weight.rows() {
            return Err(Error::Length {
                op: "AttentionHead attention vector",
                left: attention.len(),
                right: 2 * weight.rows(),
            });
        }
        let grad_weight = Matrix::zeros(weight.rows(), weight.cols());
        let grad_attention = vec![T::zero(); attention.len()];
        Ok(Self {
            weight,
            attention,
            grad_weight,
            grad_attention,
        })
    }

    /// Glorot-uniform `W`; `a` uniform in `±sqrt(6 / (2·d_out + 1))`.
    pub fn init<R: Rng>(d_in: usize, d_out: usize, rng: &mut R) -> Self {
        let mut weight = Matrix::zeros(d_out, d_in);
        uniform_fill(weight.as_mut_slice(), glorot_bound(d_in, d_out), rng);
        let mut attention = vec![T::zero(); 2 * d_out];
        uniform_fill(&mut attention, glorot_bound(2 * d_out, 1), rng);
        Self::new(weight, attention).expect("shapes are consistent by construction")
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    fn split_attention(&self) -> (&[T], &[T]) {
        self.attention.split_at(self.output_dim())
    }

    /// Pre-activation logits `a_dst·z_v + a_src·z_u` per CSR entry.
    fn raw_logits(&self, g: &Graph<T>, projected: &Matrix<T>) -> Vec<T> {
        let (a_dst, a_src) = self.split_attention();
        let n = g.num_nodes();
        let s_dst: Vec<T> = (0..n).map(|v| dot(a_dst, projected.row(v))).collect();
        let s_src: Vec<T> = (0..n).map(|u| dot(a_src, projected.row(u))).collect();
        let mut raw = Vec::with_capacity(g.num_entries());
        for v in 0..n {
            raw.extend(g.neighbors(v).iter().map(|&u| s_dst[v] + s_src[u]));
        }
        raw
    }
}

/// LeakyReLU followed by the `±LOGIT_CLAMP` clamp.
#[inline]
fn activate_logit<T: Scalar>(raw: T, slope: T) -> T {
    let bound = T::lit(LOGIT_CLAMP);
    leaky_relu_scalar(raw, slope).max(-bound).min(bound)
}

fn check_input<T: Scalar>(g: &Graph<T>, h: &Matrix<T>, d_in: usize, op: &'static str) -> Result<()> {
    if h.rows() != g.num_nodes() || h.cols() != d_in {
        return Err(Error::Dimension {
            op,
            left: h.shape(),
            right: (g.num_nodes(), d_in),
        });
    }
    if !g.has_all_self_loops() {
        return Err(Error::invalid(format!("{op}: graph must contain self-loops")));
    }
    Ok(())
}

/// Attention logits `e_vu` for every CSR entry of `g`, in CSR order.
pub fn attention_logits<T: Scalar>(
    head: &AttentionHead<T>,
    g: &Graph<T>,
    h: &Matrix<T>,
    slope: f64,
) -> Result<Vec<T>> {
    check_input(g, h, head.input_dim(), "attention_logits")?;
    let projected = h.matmul_transposed(&head.weight)?;
    let slope = T::lit(slope);
    Ok(head
        .raw_logits(g, &projected)
        .into_iter()
        .map(|r| activate_logit(r, slope))
        .collect())
}

/// Softmax of `logits` within each destination node's neighborhood.
pub fn attention_coefficients<T: Scalar>(logits: &[T], g: &Graph<T>) -> Result<Vec<T>> {
    if logits.len() != g.num_entries() {
        return Err(Error::Length {
            op: "attention_coefficients",
            left: logits.len(),
            right: g.num_entries(),
        });
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("attention_coefficients"));
    }
    Ok(offset_softmax(logits, g.offsets()))
}

#[derive(Clone, Debug)]
pub struct HeadCache<T> {
    pub projected: Matrix<T>,
    pub raw_logits: Vec<T>,
    pub attention: Vec<T>,
}

/// Everything the backward pass needs from one forward call.
#[derive(Clone, Debug)]
pub struct GatCache<T> {
    pub input: Matrix<T>,
    pub heads: Vec<HeadCache<T>>,
    pub pre_activation: Matrix<T>,
    num_nodes: usize,
    num_entries: usize,
}

impl<T> GatCache<T> {
    /// Per-entry attention coefficients of `head`, aligned with the graph's CSR order.
    pub fn attention(&self, head: usize) -> &[T] {
        &self.heads[head].attention
    }
}

/// A GAT layer of one or more heads.
#[derive(Clone, Debug, PartialEq)]
pub struct GatLayer<T> {
    heads: Vec<AttentionHead<T>>,
    combine: HeadCombine,
    activation: Activation,
    slope: f64,
}

impl<T: Scalar> GatLayer<T> {
    pub fn new(
        heads: Vec<AttentionHead<T>>,
        combine: HeadCombine,
        activation: Activation,
        slope: f64,
    ) -> Result<Self> {
        let Some(first) = heads.first() else {
            return Err(Error::invalid("GAT layer needs at least one head"));
        };
        let shape = first.weight.shape();
        if heads.iter().any(|h| h.weight.shape() != shape) {
            return Err(Error::invalid("all heads in a layer must share one shape"));
        }
        if !(slope > 0.0 && slope < 1.0) {
            return Err(Error::invalid(format!("LeakyReLU slope {slope} not in (0, 1)")));
        }
        Ok(Self {
            heads,
            combine,
            activation,
            slope,
        })
    }

    /// Single-head layer.
    pub fn single(weight: Matrix<T>, attention: Vec<T>, activation: Activation) -> Result<Self> {
        Self::new(
            vec![AttentionHead::new(weight, attention)?],
            HeadCombine::Mean,
            activation,
            DEFAULT_SLOPE,
        )
    }

    pub fn init<R: Rng>(
        d_in: usize,
        d_head: usize,
        num_heads: usize,
        combine: HeadCombine,
        activation: Activation,
        slope: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let heads = (0..num_heads).map(|_| AttentionHead::init(d_in, d_head, rng)).collect();
        Self::new(heads, combine, activation, slope)
    }

    pub fn heads(&self) -> &[AttentionHead<T>] {
        &self.heads
    }

    pub fn heads_mut(&mut self) -> &mut [AttentionHead<T>] {
        &mut self.heads
    }

    pub fn combine(&self) -> HeadCombine {
        self.combine
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn input_dim(&self) -> usize {
        self.heads[0].input_dim()
    }

    pub fn head_dim(&self) -> usize {
        self.heads[0].output_dim()
    }

    pub fn output_dim(&self) -> usize {
        match self.combine {
            HeadCombine::Concat => self.head_dim() * self.heads.len(),
            HeadCombine::Mean => self.head_dim(),
        }
    }

    pub fn forward(&self, g: &Graph<T>, h: &Matrix<T>) -> Result<(Matrix<T>, GatCache<T>)> {
        check_input(g, h, self.input_dim(), "gat_layer_forward")?;
        let n = g.num_nodes();
        let d = self.head_dim();
        let k = self.heads.len();
        let slope = T::lit(self.slope);
        let mut pre = Matrix::zeros(n, self.output_dim());
        let mut head_caches = Vec::with_capacity(k);
        for (hi, head) in self.heads.iter().enumerate() {
            let projected = h.matmul_transposed(&head.weight)?;
            let raw_logits = head.raw_logits(g, &projected);
            let logits: Vec<T> = raw_logits.iter().map(|&r| activate_logit(r, slope)).collect();
            let attention = offset_softmax(&logits, g.offsets());
            let (col0, scale) = match self.combine {
                HeadCombine::Concat => (hi * d, T::one()),
                HeadCombine::Mean => (0, T::one() / T::lit(k as f64)),
            };
            for v in 0..n {
                let range = g.offsets()[v]..g.offsets()[v + 1];
                let out = &mut pre.row_mut(v)[col0..col0 + d];
                for idx in range {
                    let u = g.targets()[idx];
                    axpy(scale * attention[idx], projected.row(u), out);
                }
            }
            head_caches.push(HeadCache {
                projected,
                raw_logits,
                attention,
            });
        }
        if !pre.is_finite() {
            return Err(Error::NonFinite("gat_layer_forward"));
        }
        let out = self.activation.forward(&pre);
        let cache = GatCache {
            input: h.clone(),
            heads: head_caches,
            pre_activation: pre,
            num_nodes: n,
            num_entries: g.num_entries(),
        };
        Ok((out, cache))
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. the layer input.
    pub fn backward(&mut self, cache: &GatCache<T>, g: &Graph<T>, d_out: &Matrix<T>) -> Result<Matrix<T>> {
        if cache.num_nodes != g.num_nodes() || cache.num_entries != g.num_entries() || cache.heads.len() != self.heads.len() {
            return Err(Error::CacheMismatch(format!(
                "cache for {} nodes / {} entries, graph has {} / {}",
                cache.num_nodes,
                cache.num_entries,
                g.num_nodes(),
                g.num_entries()
            )));
        }
        if d_out.shape() != cache.pre_activation.shape() {
            return Err(Error::Dimension {
                op: "gat_layer_backward",
                left: d_out.shape(),
                right: cache.pre_activation.shape(),
            });
        }
        let n = g.num_nodes();
        let d = self.head_dim();
        let k = self.heads.len();
        let slope = T::lit(self.slope);
        let clamp = T::lit(LOGIT_CLAMP);
        let offsets = g.offsets();
        let targets = g.targets();
        let d_pre = self.activation.backward(&cache.pre_activation, d_out);
        let mut d_input = Matrix::zeros(n, self.input_dim());

        for (hi, (head, hc)) in self.heads.iter_mut().zip(&cache.heads).enumerate() {
            let (col0, scale) = match self.combine {
                HeadCombine::Concat => (hi * d, T::one()),
                HeadCombine::Mean => (0, T::one() / T::lit(k as f64)),
            };
            let upstream = |v: usize| &d_pre.row(v)[col0..col0 + d];
            let z = &hc.projected;
            let mut dz = Matrix::zeros(n, d);
            let mut ds_dst = vec![T::zero(); n];
            let mut ds_src = vec![T::zero(); n];
            let mut d_alpha = vec![T::zero(); targets.len()];

            for v in 0..n {
                let g_v = upstream(v);
                for idx in offsets[v]..offsets[v + 1] {
                    let u = targets[idx];
                    d_alpha[idx] = scale * dot(g_v, z.row(u));
                    axpy(scale * hc.attention[idx], g_v, dz.row_mut(u));
                }
                // Softmax Jacobian: de_i = α_i (dα_i − Σ_j α_j dα_j).
                let range = offsets[v]..offsets[v + 1];
                let weighted: T = range.clone().map(|i| hc.attention[i] * d_alpha[i]).sum();
                for idx in range {
                    let raw = hc.raw_logits[idx];
                    if leaky_relu_scalar(raw, slope).abs() > clamp {
                        continue;
                    }
                    let de = hc.attention[idx] * (d_alpha[idx] - weighted);
                    let d_raw = de * leaky_relu_derivative(raw, slope);
                    ds_dst[v] += d_raw;
                    ds_src[targets[idx]] += d_raw;
                }
            }

            let (a_dst, a_src) = head.attention.split_at(d);
            let (ga_dst, ga_src) = head.grad_attention.split_at_mut(d);
            for v in 0..n {
                axpy(ds_dst[v], z.row(v), ga_dst);
                axpy(ds_src[v], z.row(v), ga_src);
                let row = dz.row_mut(v);
                axpy(ds_dst[v], a_dst, row);
                axpy(ds_src[v], a_src, row);
            }
            head.grad_weight.add_assign(&dz.transposed_matmul(&cache.input)?)?;
            d_input.add_assign(&dz.matmul(&head.weight)?)?;
        }
        Ok(d_input)
    }
}

impl<T: Scalar> Trainable<T> for GatLayer<T> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        for head in &mut self.heads {
            f(head.weight.as_mut_slice(), head.grad_weight.as_mut_slice());
            f(&mut head.attention, &mut head.grad_attention);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::seed::{self, Stream};

    fn random_graph(n: usize, p: f64, seed: u64, d: usize) -> Graph<f64> {
        let mut rng = seed::rng(seed, Stream::Sbm, 99);
        let mut edges: Vec<Edge> = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let mut feats = Matrix::zeros(n, d);
        uniform_fill(feats.as_mut_slice(), 1.0, &mut rng);
        Graph::from_edges(n, &edges, feats, None).unwrap().add_self_loops()
    }

    /// Dense oracle: materializes the concatenated vector per edge and the full
    /// attention matrix, then multiplies.
    fn dense_forward(layer: &GatLayer<f64>, g: &Graph<f64>, h: &Matrix<f64>) -> Matrix<f64> {
        let n = g.num_nodes();
        let head = &layer.heads()[0];
        let d = head.output_dim();
        let z: Vec<Vec<f64>> = (0..n)
            .map(|u| {
                (0..d)
                    .map(|i| (0..h.cols()).map(|j| head.weight.get(i, j) * h.get(u, j)).sum())
                    .collect()
            })
            .collect();
        let mut att = vec![vec![0.0; n]; n];
        for v in 0..n {
            let mut logits = vec![f64::NEG_INFINITY; n];
            for &u in g.neighbors(v) {
                let cat: Vec<f64> = z[v].iter().chain(&z[u]).copied().collect();
                let s: f64 = cat.iter().zip(&head.attention).map(|(x, y)| x * y).sum();
                logits[u] = if s >= 0.0 { s } else { 0.2 * s };
            }
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = logits.iter().map(|l| (l - m).exp()).sum();
            for u in 0..n {
                att[v][u] = (logits[u] - m).exp() / total;
            }
        }
        let mut out = Matrix::zeros(n, d);
        for v in 0..n {
            for u in 0..n {
                for i in 0..d {
                    let cur = out.get(v, i);
                    out.set(v, i, cur + att[v][u] * z[u][i]);
                }
            }
        }
        out.map(|x| layer.activation().apply(x))
    }

    #[test]
    fn zero_attention_gives_zero_logits() {
        let g = random_graph(5, 0.5, 1, 3);
        let head = AttentionHead::new(Matrix::identity(3), vec![0.0; 6]).unwrap();
        let logits = attention_logits(&head, &g, g.features(), DEFAULT_SLOPE).unwrap();
        assert!(logits.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn hand_computed_logit() {
        let g = Graph::from_edges(2, &[(0, 1)], Matrix::from_rows(&[[2.0], [3.0]]).unwrap(), None)
            .unwrap()
            .add_self_loops();
        let head = AttentionHead::new(Matrix::identity(1), vec![1.0, 1.0]).unwrap();
        let logits = attention_logits(&head, &g, g.features(), DEFAULT_SLOPE).unwrap();
        // Entries of node 0: (0 <- 0), (0 <- 1).
        assert_eq!(logits[1], 5.0);
        assert_eq!(logits[0], 4.0);
    }

    #[test]
    fn logits_match_concatenation_oracle() {
        let g = random_graph(6, 0.5, 2, 3);
        let mut rng = seed::rng(2, Stream::Init, 0);
        let head = AttentionHead::<f64>::init(3, 4, &mut rng);
        let logits = attention_logits(&head, &g, g.features(), DEFAULT_SLOPE).unwrap();
        let h = g.features();
        let z = h.matmul_transposed(&head.weight).unwrap();
        let mut idx = 0;
        for v in 0..6 {
            for &u in g.neighbors(v) {
                let cat: Vec<f64> = z.row(v).iter().chain(z.row(u)).copied().collect();
                let s: f64 = cat.iter().zip(&head.attention).map(|(x, y)| x * y).sum();
                let expected = if s >= 0.0 { s } else { 0.2 * s };
                assert!((logits[idx] - expected).abs() < 1e-12);
                idx += 1;
            }
        }
    }

    #[test]
    fn coefficients_single_and_uniform() {
        let g = Graph::from_edges(3, &[(0, 1)], Matrix::<f64>::identity(3), None)
            .unwrap()
            .add_self_loops();
        let alpha = attention_coefficients(&vec![0.3; g.num_entries()], &g).unwrap();
        // Node 2 only has its self-loop.
        assert_eq!(alpha[g.offsets()[2]], 1.0);
        assert_eq!(alpha[0], 0.5);
        assert!(attention_coefficients(&[0.0], &g).is_err());
    }

    #[test]
    fn uniform_attention_is_neighborhood_mean() {
        let g = random_graph(7, 0.4, 3, 3);
        let layer = GatLayer::single(Matrix::identity(3), vec![0.0; 6], Activation::Identity).unwrap();
        let (out, _) = layer.forward(&g, g.features()).unwrap();
        for v in 0..7 {
            let nb = g.neighbors(v);
            for j in 0..3 {
                let mean: f64 = nb.iter().map(|&u| g.features().get(u, j)).sum::<f64>() / nb.len() as f64;
                assert!((out.get(v, j) - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_node_self_loop_is_projection() {
        let g = Graph::from_edges(1, &[], Matrix::from_rows(&[[1.0, -2.0]]).unwrap(), None)
            .unwrap()
            .add_self_loops();
        let w = Matrix::from_rows(&[[0.5, 1.0], [2.0, 0.0], [1.0, 1.0]]).unwrap();
        let layer = GatLayer::single(w.clone(), vec![0.7; 6], Activation::Identity).unwrap();
        let (out, _) = layer.forward(&g, g.features()).unwrap();
        assert_eq!(out, g.features().matmul_transposed(&w).unwrap());
    }

    #[test]
    fn forward_matches_dense_oracle() {
        let g = random_graph(8, 0.4, 4, 5);
        let mut rng = seed::rng(4, Stream::Init, 0);
        for act in [Activation::Identity, Activation::LeakyRelu { slope: 0.2 }] {
            let layer = GatLayer::<f64>::init(5, 4, 1, HeadCombine::Mean, act, DEFAULT_SLOPE, &mut rng).unwrap();
            let (out, cache) = layer.forward(&g, g.features()).unwrap();
            assert!(out.max_abs_diff(&dense_forward(&layer, &g, g.features())) < 1e-10);
            for v in 0..8 {
                let s: f64 = cache.attention(0)[g.offsets()[v]..g.offsets()[v + 1]].iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn forward_requires_self_loops_and_shapes() {
        let g = Graph::from_edges(2, &[(0, 1)], Matrix::<f64>::identity(2), None).unwrap();
        let layer = GatLayer::single(Matrix::identity(2), vec![0.0; 4], Activation::Identity).unwrap();
        assert!(layer.forward(&g, g.features()).is_err());
        let g = g.add_self_loops();
        assert!(matches!(
            layer.forward(&g, &Matrix::zeros(2, 3)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn backward_zero_upstream_and_linearity() {
        let g = random_graph(8, 0.4, 5, 5);
        let mut rng = seed::rng(5, Stream::Init, 0);
        let mut layer = GatLayer::<f64>::init(5, 4, 1, HeadCombine::Mean, Activation::LeakyRelu { slope: 0.2 }, DEFAULT_SLOPE, &mut rng).unwrap();
        let (out, cache) = layer.forward(&g, g.features()).unwrap();
        let dx = layer.backward(&cache, &g, &Matrix::zeros(8, 4)).unwrap();
        assert!(dx.as_slice().iter().all(|&x| x == 0.0));
        let mut grads = Vec::new();
        layer.visit_params(&mut |_, gr| grads.extend_from_slice(gr));
        assert!(grads.iter().all(|&x| x == 0.0));

        let mut upstream = out.clone();
        uniform_fill(upstream.as_mut_slice(), 1.0, &mut rng);
        let dx1 = layer.backward(&cache, &g, &upstream).unwrap();
        let mut g1 = Vec::new();
        layer.visit_params(&mut |_, gr| g1.extend_from_slice(gr));
        layer.zero_grad();
        let dx3 = layer.backward(&cache, &g, &upstream.scale(3.0)).unwrap();
        let mut g3 = Vec::new();
        layer.visit_params(&mut |_, gr| g3.extend_from_slice(gr));
        assert!(dx3.max_abs_diff(&dx1.scale(3.0)) < 1e-12);
        for (a, b) in g1.iter().zip(&g3) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_rejects_mismatched_cache() {
        let g = random_graph(8, 0.4, 6, 5);
        let other = random_graph(9, 0.4, 6, 5);
        let mut rng = seed::rng(6, Stream::Init, 0);
        let mut layer = GatLayer::<f64>::init(5, 4, 1, HeadCombine::Mean, Activation::Identity, DEFAULT_SLOPE, &mut rng).unwrap();
        let (_, cache) = layer.forward(&g, g.features()).unwrap();
        assert!(matches!(
            layer.backward(&cache, &other, &Matrix::zeros(9, 4)),
            Err(Error::CacheMismatch(_))
        ));
    }

    #[test]
    fn concat_heads_widen_output() {
        let g = random_graph(6, 0.5, 7, 3);
        let mut rng = seed::rng(7, Stream::Init, 0);
        let layer = GatLayer::<f64>::init(3, 2, 3, HeadCombine::Concat, Activation::Identity, DEFAULT_SLOPE, &mut rng).unwrap();
        let (out, _) = layer.forward(&g, g.features()).unwrap();
        assert_eq!(out.shape(), (6, 6));
        // Each block of columns is the matching single-head layer.
        for (k, head) in layer.heads().iter().enumerate() {
            let single = GatLayer::new(vec![head.clone()], HeadCombine::Mean, Activation::Identity, DEFAULT_SLOPE).unwrap();
            let (part, _) = single.forward(&g, g.features()).unwrap();
            for v in 0..6 {
                for j in 0..2 {
                    assert!((out.get(v, 2 * k + j) - part.get(v, j)).abs() < 1e-12);
                }
            }
        }
    }
}
