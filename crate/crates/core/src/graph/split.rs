use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{canonical, Edge, Graph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{self, Stream};

/// Train / validation / test fractions of the positive edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(0.0..=1.0).contains(r)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "split ratios {parts:?} must lie in [0, 1] and sum to 1"
            )));
        }
        Ok(())
    }

    /// Split sizes: floor, floor, remainder.
    pub fn counts(&self, num_edges: usize) -> [usize; 3] {
        // The epsilon absorbs representation error such as 0.7 * 10 = 6.999...
        let floor = |r: f64| ((r * num_edges as f64) + 1e-9).floor() as usize;
        let train = floor(self.train).min(num_edges);
        let val = floor(self.val).min(num_edges - train);
        [train, val, num_edges - train - val]
    }
}

/// Disjoint positive edge sets plus labeled non-edges for each split.
/// All pairs are canonical `(u, v)` with `u < v`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EdgeSplit {
    pub train_pos: Vec<Edge>,
    pub val_pos: Vec<Edge>,
    pub test_pos: Vec<Edge>,
    pub train_neg: Vec<Edge>,
    pub val_neg: Vec<Edge>,
    pub test_neg: Vec<Edge>,
    pub seed: u64,
}

impl EdgeSplit {
    /// Splits `g` and draws `negative_ratio` non-edges per positive in every split.
    pub fn new<T: Scalar>(
        g: &Graph<T>,
        ratios: SplitRatios,
        negative_ratio: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut split = split_edges(g, ratios, seed)?;
        let counts = [split.train_pos.len(), split.val_pos.len(), split.test_pos.len()];
        let [train, val, test] = sample_negatives(g, counts, negative_ratio, seed)?;
        split.train_neg = train;
        split.val_neg = val;
        split.test_neg = test;
        Ok(split)
    }

    /// Evaluation pairs of one split with their labels, positives first.
    pub fn labeled_pairs(&self, which: SplitKind) -> (Vec<Edge>, Vec<bool>) {
        let (pos, neg) = match which {
            SplitKind::Train => (&self.train_pos, &self.train_neg),
            SplitKind::Val => (&self.val_pos, &self.val_neg),
            SplitKind::Test => (&self.test_pos, &self.test_neg),
        };
        let pairs: Vec<Edge> = pos.iter().chain(neg).copied().collect();
        let labels = std::iter::repeat_n(true, pos.len())
            .chain(std::iter::repeat_n(false, neg.len()))
            .collect();
        (pairs, labels)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitKind {
    Train,
    Val,
    Test,
}

impl SplitKind {
    pub fn name(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Val => "val",
            SplitKind::Test => "test",
        }
    }
}

/// Seeded shuffle of the canonical edge list cut into floor/floor/remainder parts.
/// Negative lists are left empty.
pub fn split_edges<T: Scalar>(g: &Graph<T>, ratios: SplitRatios, seed: u64) -> Result<EdgeSplit> {
    ratios.validate()?;
    let mut edges = g.edges();
    if edges.len() < 3 {
        return Err(Error::TooFewEdges {
            edges: edges.len(),
            required: 3,
        });
    }
    edges.shuffle(&mut seed::rng(seed, Stream::Split, 0));
    let [train, val, _] = ratios.counts(edges.len());
    let test_pos = edges.split_off(train + val);
    let val_pos = edges.split_off(train);
    Ok(EdgeSplit {
        train_pos: edges,
        val_pos,
        test_pos,
        seed,
        ..Default::default()
    })
}

fn non_edge_count<T: Scalar>(g: &Graph<T>) -> usize {
    let n = g.num_nodes();
    n * n.saturating_sub(1) / 2 - g.num_edges()
}

/// Uniform draw of `count` distinct non-adjacent pairs, excluding anything in `taken`.
/// Chosen pairs are added to `taken`.
fn draw_non_edges<T: Scalar, R: Rng>(
    g: &Graph<T>,
    count: usize,
    taken: &mut HashSet<Edge>,
    rng: &mut R,
) -> Result<Vec<Edge>> {
    let n = g.num_nodes();
    let available = non_edge_count(g).saturating_sub(taken.len());
    if count > available {
        return Err(Error::NegativeBound {
            requested: count,
            available,
        });
    }
    let mut out = Vec::with_capacity(count);
    if 2 * count <= available {
        // Rejection sampling: each draw succeeds with probability >= 1/2.
        while out.len() < count {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v {
                continue;
            }
            let e = canonical(u, v);
            if g.has_edge(e.0, e.1) || !taken.insert(e) {
                continue;
            }
            out.push(e);
        }
    } else {
        let mut pool: Vec<Edge> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v) && !taken.contains(&(u, v)))
            .collect();
        let (chosen, _) = pool.partial_shuffle(rng, count);
        for &e in chosen.iter() {
            taken.insert(e);
            out.push(e);
        }
    }
    Ok(out)
}

/// `count` uniformly drawn non-edges of `g` (no self-pairs, no duplicates).
pub fn sample_non_edges<T: Scalar, R: Rng>(g: &Graph<T>, count: usize, rng: &mut R) -> Result<Vec<Edge>> {
    draw_non_edges(g, count, &mut HashSet::new(), rng)
}

/// Draws `round(ratio * count)` non-edges of the full graph for each of the
/// three splits. Pairs are distinct within and across splits.
pub fn sample_negatives<T: Scalar>(
    g: &Graph<T>,
    counts_per_split: [usize; 3],
    ratio: f64,
    seed: u64,
) -> Result<[Vec<Edge>; 3]> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::invalid(format!("negative ratio {ratio} must be positive")));
    }
    let wanted = counts_per_split.map(|c| (ratio * c as f64).round() as usize);
    let total: usize = wanted.iter().sum();
    let available = non_edge_count(g);
    if total > available {
        return Err(Error::NegativeBound {
            requested: total,
            available,
        });
    }
    let mut rng = seed::rng(seed, Stream::EvalNegatives, 0);
    let mut taken = HashSet::new();
    let mut out: [Vec<Edge>; 3] = Default::default();
    for (slot, &want) in out.iter_mut().zip(&wanted) {
        *slot = draw_non_edges(g, want, &mut taken, &mut rng)?;
    }
    Ok(out)
}
