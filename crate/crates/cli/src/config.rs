//! Run configuration: `key = value` lines with `#` comments. Every key has a
//! default; unknown keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gatlink::graph::{EdgeFormat, SbmParams, SplitRatios};
use gatlink::linkpred::ScorerKind;
use gatlink::{Method, TrainConfig};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Florentine,
    Sbm,
    File(PathBuf),
}

impl Dataset {
    /// Short name used in run directory names.
    pub fn name(&self) -> String {
        match self {
            Dataset::Florentine => "florentine".into(),
            Dataset::Sbm => "sbm".into(),
            Dataset::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into()),
        }
    }
}

impl std::fmt::Display for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dataset::Florentine => f.write_str("florentine"),
            Dataset::Sbm => f.write_str("sbm"),
            Dataset::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: Dataset,
    pub format: EdgeFormat,
    pub features: Option<PathBuf>,
    pub train: TrainConfig,
    /// Seed for the edge split and evaluation negatives; `None` follows `seed`.
    pub split_seed: Option<u64>,
    pub ratios: SplitRatios,
    pub output_dir: PathBuf,
    pub sbm: SbmParams,
    /// Seed for SBM sampling; `None` follows `seed`.
    pub sbm_seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: Dataset::Florentine,
            format: EdgeFormat::EdgeList,
            features: None,
            train: TrainConfig::default(),
            split_seed: None,
            ratios: SplitRatios::default(),
            output_dir: PathBuf::from("runs"),
            sbm: SbmParams::default(),
            sbm_seed: None,
        }
    }
}

/// `(key, description)` for every accepted key, in canonical order.
pub const KEYS: &[(&str, &str)] = &[
    ("dataset", "florentine, sbm, or a path to an edge file"),
    ("format", "edge file format: edgelist or csv"),
    ("features", "optional node feature file (node id then values per line)"),
    ("method", "crimegat, gcn, sage, svm or pa"),
    ("seed", "root seed for initialization and training negatives"),
    ("split_seed", "seed for the edge split and evaluation negatives (empty: use seed)"),
    ("train_ratio", "fraction of edges used for training"),
    ("val_ratio", "fraction of edges used for validation"),
    ("test_ratio", "fraction of edges used for testing"),
    ("negative_ratio", "negatives per positive in every split"),
    ("learning_rate", "Adam step size"),
    ("epochs", "maximum number of full-batch epochs"),
    ("patience", "epochs without validation AUC improvement before stopping"),
    ("hidden_dims", "comma-separated layer widths after the input"),
    ("heads", "attention heads per GAT layer"),
    ("leaky_slope", "LeakyReLU negative slope"),
    ("scorer", "link scorer: dot or hadamard_linear"),
    ("svm_lambda", "SVM regularization strength"),
    ("svm_epochs", "SVM passes over the training pairs"),
    ("output_dir", "directory that holds run directories"),
    ("sbm_blocks", "SBM number of blocks"),
    ("sbm_nodes_per_block", "SBM nodes per block"),
    ("sbm_p_in", "SBM within-block edge probability"),
    ("sbm_p_out", "SBM between-block edge probability"),
    ("sbm_feature_dim", "SBM feature dimension"),
    ("sbm_feature_signal", "SBM block signal added to Gaussian features"),
    ("sbm_seed", "seed for SBM sampling (empty: use seed)"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_opt_seed(key: &str, value: &str) -> Result<Option<u64>, CliError> {
    if value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn opt_seed(s: Option<u64>) -> String {
    s.map(|x| x.to_string()).unwrap_or_default()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        let core = |e: gatlink::Error| CliError::Config(format!("`{key}`: {e}"));
        match key {
            "dataset" => {
                self.dataset = match value {
                    "florentine" => Dataset::Florentine,
                    "sbm" => Dataset::Sbm,
                    "" => return Err(CliError::Config("`dataset` must not be empty".into())),
                    path => Dataset::File(PathBuf::from(path)),
                }
            }
            "format" => self.format = value.parse().map_err(core)?,
            "features" => self.features = (!value.is_empty()).then(|| PathBuf::from(value)),
            "method" => self.train.method = value.parse().map_err(core)?,
            "seed" => self.train.seed = parse(key, value)?,
            "split_seed" => self.split_seed = parse_opt_seed(key, value)?,
            "train_ratio" => self.ratios.train = parse(key, value)?,
            "val_ratio" => self.ratios.val = parse(key, value)?,
            "test_ratio" => self.ratios.test = parse(key, value)?,
            "negative_ratio" => self.train.negative_ratio = parse(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "patience" => self.train.patience = parse(key, value)?,
            "hidden_dims" => {
                self.train.hidden_dims = value
                    .split(',')
                    .map(|d| parse::<usize>(key, d.trim()))
                    .collect::<Result<_, _>>()?
            }
            "heads" => self.train.heads = parse(key, value)?,
            "leaky_slope" => self.train.leaky_slope = parse(key, value)?,
            "scorer" => self.train.scorer = value.parse::<ScorerKind>().map_err(core)?,
            "svm_lambda" => self.train.svm_lambda = parse(key, value)?,
            "svm_epochs" => self.train.svm_epochs = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "sbm_blocks" => self.sbm.blocks = parse(key, value)?,
            "sbm_nodes_per_block" => self.sbm.nodes_per_block = parse(key, value)?,
            "sbm_p_in" => self.sbm.p_in = parse(key, value)?,
            "sbm_p_out" => self.sbm.p_out = parse(key, value)?,
            "sbm_feature_dim" => self.sbm.feature_dim = parse(key, value)?,
            "sbm_feature_signal" => self.sbm.feature_signal = parse(key, value)?,
            "sbm_seed" => self.sbm_seed = parse_opt_seed(key, value)?,
            other => return Err(CliError::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies the lines of a configuration file on top of `self`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key = value", i + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::Config(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override `{o}` is not key=value")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let core = |e: gatlink::Error| CliError::Config(e.to_string());
        self.train.validate().map_err(core)?;
        self.ratios.validate().map_err(core)?;
        if self.dataset == Dataset::Sbm {
            self.sbm.validate().map_err(core)?;
        }
        Ok(())
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed.unwrap_or(self.train.seed)
    }

    pub fn sbm_seed(&self) -> u64 {
        self.sbm_seed.unwrap_or(self.train.seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.train.seed = seed;
        c
    }

    pub fn with_method(&self, method: Method) -> Self {
        let mut c = self.clone();
        c.train.method = method;
        c
    }

    /// Directory shared by all methods trained on this dataset and seed.
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir
            .join(format!("{}-seed{}", self.dataset.name(), self.train.seed))
    }

    pub fn value_of(&self, key: &str) -> String {
        let t = &self.train;
        match key {
            "dataset" => self.dataset.to_string(),
            "format" => match self.format {
                EdgeFormat::EdgeList => "edgelist".into(),
                EdgeFormat::Csv => "csv".into(),
            },
            "features" => self
                .features
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "method" => t.method.to_string(),
            "seed" => t.seed.to_string(),
            "split_seed" => opt_seed(self.split_seed),
            "train_ratio" => self.ratios.train.to_string(),
            "val_ratio" => self.ratios.val.to_string(),
            "test_ratio" => self.ratios.test.to_string(),
            "negative_ratio" => t.negative_ratio.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "epochs" => t.epochs.to_string(),
            "patience" => t.patience.to_string(),
            "hidden_dims" => t
                .hidden_dims
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            "heads" => t.heads.to_string(),
            "leaky_slope" => t.leaky_slope.to_string(),
            "scorer" => t.scorer.name().into(),
            "svm_lambda" => t.svm_lambda.to_string(),
            "svm_epochs" => t.svm_epochs.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "sbm_blocks" => self.sbm.blocks.to_string(),
            "sbm_nodes_per_block" => self.sbm.nodes_per_block.to_string(),
            "sbm_p_in" => self.sbm.p_in.to_string(),
            "sbm_p_out" => self.sbm.p_out.to_string(),
            "sbm_feature_dim" => self.sbm.feature_dim.to_string(),
            "sbm_feature_signal" => self.sbm.feature_signal.to_string(),
            "sbm_seed" => opt_seed(self.sbm_seed),
            _ => unreachable!("every key in KEYS is rendered"),
        }
    }

    /// Every key in canonical order, with its description as a comment.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (key, doc) in KEYS {
            let _ = writeln!(out, "# {doc}\n{key} = {}", self.value_of(key));
        }
        out
    }
}
