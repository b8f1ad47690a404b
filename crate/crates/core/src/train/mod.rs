//! Full-batch training with early stopping, method dispatch and evaluation.

mod adam;

pub use adam::{adam_step, Adam, AdamConfig};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{pa_score, svm_train, LinearSvm, PairFeatures, SvmConfig, PAIR_FEATURE_DIM};
use crate::error::{Error, Result};
use crate::gat::DEFAULT_SLOPE;
use crate::graph::{default_features, sample_non_edges, Edge, EdgeSplit, Graph, SplitKind};
use crate::linkpred::{bce_loss, ScorerKind};
use crate::metrics::{auc_roc, select_threshold, MetricsReport};
use crate::model::{Architecture, EncoderKind, ModelParams};
use crate::scalar::Scalar;
use crate::seed::{self, Stream};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    CrimeGat,
    Gcn,
    Sage,
    Svm,
    Pa,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::CrimeGat, Method::Gcn, Method::Sage, Method::Svm, Method::Pa];

    pub fn name(self) -> &'static str {
        match self {
            Method::CrimeGat => "crimegat",
            Method::Gcn => "gcn",
            Method::Sage => "sage",
            Method::Svm => "svm",
            Method::Pa => "pa",
        }
    }

    /// Encoder for the graph neural methods.
    pub fn encoder(self) -> Option<EncoderKind> {
        match self {
            Method::CrimeGat => Some(EncoderKind::Gat),
            Method::Gcn => Some(EncoderKind::Gcn),
            Method::Sage => Some(EncoderKind::Sage),
            Method::Svm | Method::Pa => None,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}` (expected crimegat, gcn, sage, svm or pa)")))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    pub negative_ratio: f64,
    pub seed: u64,
    /// Layer widths after the input, e.g. `[16, 16]` for two layers.
    pub hidden_dims: Vec<usize>,
    pub heads: usize,
    pub leaky_slope: f64,
    pub scorer: ScorerKind,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::CrimeGat,
            learning_rate: 0.01,
            epochs: 300,
            patience: 30,
            negative_ratio: 1.0,
            seed: 0,
            hidden_dims: vec![16, 16],
            heads: 1,
            leaky_slope: DEFAULT_SLOPE,
            scorer: ScorerKind::Dot,
            svm_lambda: 0.01,
            svm_epochs: 200,
        }
    }
}

impl TrainConfig {
    /// A learning rate of exactly 0 is accepted so that training can be run as a no-op.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate {} must be non-negative", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if !(self.negative_ratio > 0.0 && self.negative_ratio.is_finite()) {
            return Err(Error::invalid(format!("negative_ratio {} must be positive", self.negative_ratio)));
        }
        if self.hidden_dims.is_empty() {
            return Err(Error::invalid("at least one layer is required"));
        }
        Ok(())
    }

    pub fn architecture(&self, input_dim: usize) -> Result<Architecture> {
        let encoder = self
            .method
            .encoder()
            .ok_or_else(|| Error::invalid(format!("{} has no graph encoder", self.method)))?;
        let mut dims = vec![input_dim];
        dims.extend(&self.hidden_dims);
        let arch = Architecture {
            encoder,
            dims,
            heads: self.heads,
            slope: self.leaky_slope,
            scorer: self.scorer,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn svm_config(&self) -> SvmConfig {
        SvmConfig {
            lambda: self.svm_lambda,
            epochs: self.svm_epochs,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch number of the returned parameters.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.records.iter().find(|r| r.epoch == self.best_epoch)
    }

    /// One JSON object per epoch.
    pub fn to_json_lines(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("plain record") + "\n")
            .collect()
    }
}

/// Where node features come from when the message-passing graph is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSource {
    /// Keep the graph's features.
    Given,
    /// Recompute structural defaults from training edges only.
    Structural,
}

/// Training positives plus self-loops, with standardized features. Validation and
/// test edges never appear here.
pub fn message_passing_graph<T: Scalar>(g: &Graph<T>, split: &EdgeSplit, features: FeatureSource) -> Result<Graph<T>> {
    let mut mp = g.with_edges(&split.train_pos)?;
    if features == FeatureSource::Structural {
        mp = mp.with_features(default_features(g.num_nodes(), &split.train_pos))?;
    }
    Ok(mp.standardized().add_self_loops())
}

/// Full-batch Adam on BCE over training positives and fresh per-epoch negatives,
/// with early stopping on validation AUC. `mp` is the message-passing graph.
pub fn train_model<T: Scalar>(
    mp: &Graph<T>,
    split: &EdgeSplit,
    cfg: &TrainConfig,
) -> Result<(ModelParams<T>, TrainHistory)> {
    cfg.validate()?;
    let arch = cfg.architecture(mp.feature_dim())?;
    let model = ModelParams::init(&arch, cfg.seed)?;
    train_from(model, mp, split, cfg)
}

/// [`train_model`] starting from given parameters.
pub fn train_from<T: Scalar>(
    mut model: ModelParams<T>,
    mp: &Graph<T>,
    split: &EdgeSplit,
    cfg: &TrainConfig,
) -> Result<(ModelParams<T>, TrainHistory)> {
    cfg.validate()?;
    if split.train_pos.is_empty() {
        return Err(Error::Empty("training positives"));
    }
    let (val_pairs, val_labels) = split.labeled_pairs(SplitKind::Val);
    let neg_count = (cfg.negative_ratio * split.train_pos.len() as f64).round() as usize;
    let mut adam = Adam::new(AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    });
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, ModelParams<T>)> = None;
    let mut stale = 0;

    for epoch in 1..=cfg.epochs {
        let mut rng = seed::rng(cfg.seed, Stream::TrainNegatives, epoch as u64);
        let negatives = sample_non_edges(mp, neg_count, &mut rng)?;
        let pairs: Vec<Edge> = split.train_pos.iter().chain(&negatives).copied().collect();
        let labels: Vec<bool> = (0..pairs.len()).map(|i| i < split.train_pos.len()).collect();

        let loss = match model.loss_and_gradient(mp, &pairs, &labels) {
            Err(e) if e.is_numerical() => return Err(Error::Divergence { epoch }),
            other => other?,
        };
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        adam.step(&mut model)?;

        let val_auc = match validation_auc(&model, mp, &val_pairs, &val_labels) {
            Err(e) if e.is_numerical() => return Err(Error::Divergence { epoch }),
            other => other?,
        };
        history.records.push(EpochRecord {
            epoch,
            train_loss: loss.to_f64_lossy(),
            val_auc,
        });
        if best.as_ref().is_none_or(|(b, _)| val_auc > *b) {
            best = Some((val_auc, model.clone()));
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let (_, params) = best.expect("at least one epoch runs");
    Ok((params, history))
}

fn validation_auc<T: Scalar>(model: &ModelParams<T>, mp: &Graph<T>, pairs: &[Edge], labels: &[bool]) -> Result<f64> {
    let emb = model.embed(mp)?;
    let scores = to_f64(&model.score_pairs(&emb, pairs)?)?;
    auc_roc(&scores, labels)
}

fn to_f64<T: Scalar>(xs: &[T]) -> Result<Vec<f64>> {
    let out: Vec<f64> = xs.iter().map(|x| x.to_f64_lossy()).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("link scores"));
    }
    Ok(out)
}

/// Training loss of `model` on the given pairs (no gradient).
pub fn pair_loss<T: Scalar>(model: &ModelParams<T>, mp: &Graph<T>, pairs: &[Edge], labels: &[bool]) -> Result<f64> {
    let emb = model.embed(mp)?;
    Ok(bce_loss(&model.score_pairs(&emb, pairs)?, labels)?.0.to_f64_lossy())
}

/// A fitted link predictor of any method.
#[derive(Clone, Debug, PartialEq)]
pub enum Predictor<T> {
    Gnn(ModelParams<T>),
    Svm(LinearSvm<T>),
    Pa,
}

impl<T: Scalar> Predictor<T> {
    pub fn method(&self) -> Method {
        match self {
            Predictor::Gnn(m) => match m.architecture().encoder {
                EncoderKind::Gat => Method::CrimeGat,
                EncoderKind::Gcn => Method::Gcn,
                EncoderKind::Sage => Method::Sage,
            },
            Predictor::Svm(_) => Method::Svm,
            Predictor::Pa => Method::Pa,
        }
    }

    /// Link scores on the message-passing graph `mp`; higher means more likely.
    pub fn score_pairs(&self, mp: &Graph<T>, pairs: &[Edge]) -> Result<Vec<f64>> {
        match self {
            Predictor::Gnn(model) => {
                let emb = model.embed(mp)?;
                to_f64(&model.score_pairs(&emb, pairs)?)
            }
            Predictor::Svm(svm) => {
                let x = pair_feature_matrix(mp, pairs)?;
                let scores: Vec<T> = (0..x.rows()).map(|i| svm.decision(x.row(i))).collect::<Result<_>>()?;
                to_f64(&scores)
            }
            Predictor::Pa => to_f64(&pairs.iter().map(|&(u, v)| pa_score(mp, u, v)).collect::<Result<Vec<T>>>()?),
        }
    }
}

/// Rows of [`PairFeatures`] for `pairs`.
pub fn pair_feature_matrix<T: Scalar>(g: &Graph<T>, pairs: &[Edge]) -> Result<Matrix<T>> {
    let mut data = Vec::with_capacity(pairs.len() * PAIR_FEATURE_DIM);
    for &(u, v) in pairs {
        data.extend(PairFeatures::compute(g, u, v)?.to_vec::<T>());
    }
    Matrix::from_vec(pairs.len(), PAIR_FEATURE_DIM, data)
}

/// Fits `cfg.method`. Graph methods also return their training history.
pub fn fit<T: Scalar>(mp: &Graph<T>, split: &EdgeSplit, cfg: &TrainConfig) -> Result<(Predictor<T>, Option<TrainHistory>)> {
    cfg.validate()?;
    match cfg.method {
        Method::Pa => Ok((Predictor::Pa, None)),
        Method::Svm => {
            let (pairs, labels) = split.labeled_pairs(SplitKind::Train);
            let x = pair_feature_matrix(mp, &pairs)?;
            Ok((Predictor::Svm(svm_train(&x, &labels, &cfg.svm_config())?.model), None))
        }
        _ => {
            let (model, history) = train_model(mp, split, cfg)?;
            Ok((Predictor::Gnn(model), Some(history)))
        }
    }
}

/// Scores the chosen split. The threshold is picked on validation F1 and
/// applied unchanged.
pub fn evaluate_model<T: Scalar>(
    predictor: &Predictor<T>,
    method: &str,
    mp: &Graph<T>,
    split: &EdgeSplit,
    which: SplitKind,
) -> Result<MetricsReport> {
    let (val_pairs, val_labels) = split.labeled_pairs(SplitKind::Val);
    let val_scores = predictor.score_pairs(mp, &val_pairs)?;
    let threshold = select_threshold(&val_scores, &val_labels)?;
    let (pairs, labels) = split.labeled_pairs(which);
    if pairs.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    let scores = predictor.score_pairs(mp, &pairs)?;
    MetricsReport::compute(method, which.name(), &scores, &labels, threshold)
}
