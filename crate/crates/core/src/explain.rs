//! Attention export and node ranking by received attention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{EncoderCache, ModelParams};
use crate::scalar::Scalar;

/// One attention coefficient: how much `destination` attends to `source`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub layer: usize,
    pub head: usize,
    pub destination: usize,
    pub source: usize,
    pub alpha: f64,
}

/// Every attention coefficient of every layer and head, on the message-passing graph.
pub fn attention_records<T: Scalar>(model: &ModelParams<T>, mp: &Graph<T>) -> Result<Vec<AttentionRecord>> {
    let (_, cache) = model.encode(mp, mp.features())?;
    let EncoderCache::Gat(layers) = cache else {
        return Err(Error::invalid(format!(
            "{} model has no attention; explain needs a GAT",
            model.architecture().encoder
        )));
    };
    let mut out = Vec::with_capacity(layers.len() * mp.num_entries());
    for (layer, c) in layers.iter().enumerate() {
        for head in 0..c.heads.len() {
            let alpha = c.attention(head);
            for v in 0..mp.num_nodes() {
                let range = mp.offsets()[v]..mp.offsets()[v + 1];
                for (&u, &a) in mp.targets()[range.clone()].iter().zip(&alpha[range]) {
                    out.push(AttentionRecord {
                        layer,
                        head,
                        destination: v,
                        source: u,
                        alpha: a.to_f64_lossy(),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Attention each node receives from other nodes' neighborhoods, summed over
/// layers and averaged over heads. Self-loop terms are excluded.
pub fn received_attention(records: &[AttentionRecord], num_nodes: usize) -> Vec<f64> {
    let heads_per_layer = |layer: usize| {
        records
            .iter()
            .filter(|r| r.layer == layer)
            .map(|r| r.head + 1)
            .max()
            .unwrap_or(1) as f64
    };
    let num_layers = records.iter().map(|r| r.layer + 1).max().unwrap_or(0);
    let mut mass = vec![0.0; num_nodes];
    for layer in 0..num_layers {
        let mut layer_mass = vec![0.0; num_nodes];
        for r in records.iter().filter(|r| r.layer == layer && r.source != r.destination) {
            layer_mass[r.source] += r.alpha;
        }
        let h = heads_per_layer(layer);
        for (m, l) in mass.iter_mut().zip(layer_mass) {
            *m += l / h;
        }
    }
    mass
}

/// Resolution at which received masses count as equal when ranking.
pub const RANK_RESOLUTION: f64 = 1e-9;

/// Nodes by decreasing mass; masses equal at [`RANK_RESOLUTION`] are ordered by id.
pub fn rank_nodes(mass: &[f64]) -> Vec<usize> {
    let key = |v: usize| (mass[v] / RANK_RESOLUTION).round() as i64;
    let mut order: Vec<usize> = (0..mass.len()).collect();
    order.sort_by(|&a, &b| key(b).cmp(&key(a)).then(a.cmp(&b)));
    order
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedNode {
    pub rank: usize,
    pub node: usize,
    pub label: String,
    pub received_attention: f64,
}

/// The `top_k` nodes receiving the most attention, labeled with names when available.
pub fn top_nodes<T: Scalar>(records: &[AttentionRecord], mp: &Graph<T>, top_k: usize) -> Vec<RankedNode> {
    let mass = received_attention(records, mp.num_nodes());
    rank_nodes(&mass)
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(i, v)| RankedNode {
            rank: i + 1,
            node: v,
            label: mp.label(v),
            received_attention: mass[v],
        })
        .collect()
}
