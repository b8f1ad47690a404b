//! Subcommand implementations. Each returns the text destined for stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use gatlink::explain::{attention_records, top_nodes, AttentionRecord, RankedNode};
use gatlink::graph::{EdgeSplit, Graph, SplitKind};
use gatlink::metrics::{render_json_lines, render_table};
use gatlink::model::Architecture;
use gatlink::persist::{read_model, write_model};
use gatlink::train::{evaluate_model, fit, message_passing_graph, Predictor};
use gatlink::{Method, MetricsReport};

use crate::config::RunConfig;
use crate::dataset::{self, Loaded};
use crate::error::CliError;
use crate::manifest::{read_manifest, write_manifest};

pub const SPLIT_FILE: &str = "split.jsonl";
pub const ATTENTION_FILE: &str = "attention.jsonl";

pub fn model_file(method: Method) -> String {
    format!("model-{method}.txt")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

struct Prepared {
    graph: Graph<f64>,
    split: EdgeSplit,
    mp: Graph<f64>,
}

/// Loads the dataset and either draws the split or reads it from the run's manifest.
fn prepare(cfg: &RunConfig, from_manifest: bool) -> Result<Prepared, CliError> {
    cfg.validate()?;
    let Loaded { graph, features } = dataset::load(cfg)?;
    let split = if from_manifest {
        let path = cfg.run_dir().join(SPLIT_FILE);
        read_manifest(&read(&path)?, graph.num_nodes())?
    } else {
        EdgeSplit::new(&graph, cfg.ratios, cfg.train.negative_ratio, cfg.split_seed())?
    };
    let mp = message_passing_graph(&graph, &split, features)?;
    Ok(Prepared { graph, split, mp })
}

fn reports(predictor: &Predictor<f64>, method: Method, p: &Prepared) -> Result<Vec<MetricsReport>, CliError> {
    [SplitKind::Val, SplitKind::Test]
        .into_iter()
        .map(|k| Ok(evaluate_model(predictor, method.name(), &p.mp, &p.split, k)?))
        .collect()
}

fn write_split(cfg: &RunConfig, p: &Prepared) -> Result<PathBuf, CliError> {
    let path = cfg.run_dir().join(SPLIT_FILE);
    let text = write_manifest(&p.split, p.graph.num_nodes());
    if let Ok(old) = fs::read_to_string(&path) {
        if old != text {
            eprintln!("warning: {} replaced; models trained on the old split no longer match it", path.display());
        }
    }
    write(&path, &text)?;
    Ok(path)
}

fn summary(cfg: &RunConfig, method: Method, p: &Prepared, best_epoch: Option<usize>, reports: &[MetricsReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dataset: {}", cfg.dataset);
    let _ = writeln!(s, "method: {method}");
    let _ = writeln!(s, "seed: {}", cfg.train.seed);
    let _ = writeln!(s, "split_seed: {}", cfg.split_seed());
    let _ = writeln!(s, "nodes: {}", p.graph.num_nodes());
    let _ = writeln!(s, "edges: {}", p.graph.num_edges());
    let _ = writeln!(
        s,
        "split: train {} / val {} / test {} positives",
        p.split.train_pos.len(),
        p.split.val_pos.len(),
        p.split.test_pos.len()
    );
    if let Some(e) = best_epoch {
        let _ = writeln!(s, "best_epoch: {e}");
    }
    if let Some(r) = reports.first() {
        let _ = writeln!(s, "threshold: {} (chosen on validation F1)", r.threshold);
    }
    s.push('\n');
    let test: Vec<MetricsReport> = reports.iter().filter(|r| r.split == "test").cloned().collect();
    s.push_str(&render_table(&test));
    s
}

/// Trains each method on one seed and writes its artifacts. Returns the test rows.
pub fn train(cfg: &RunConfig, methods: &[Method]) -> Result<Vec<MetricsReport>, CliError> {
    let p = prepare(cfg, false)?;
    let dir = cfg.run_dir();
    write_split(cfg, &p)?;
    let mut test_rows = Vec::new();
    for &method in methods {
        let mcfg = cfg.with_method(method);
        let (predictor, history) = fit(&p.mp, &p.split, &mcfg.train)?;
        let rows = reports(&predictor, method, &p)?;
        write(&dir.join(model_file(method)), &write_model(&predictor))?;
        write(&dir.join(format!("config-{method}.txt")), &mcfg.render())?;
        write(&dir.join(format!("metrics-{method}.jsonl")), &render_json_lines(&rows))?;
        if let Some(h) = &history {
            write(&dir.join(format!("history-{method}.jsonl")), &h.to_json_lines())?;
        }
        let best = history.as_ref().map(|h| h.best_epoch);
        write(&dir.join(format!("summary-{method}.txt")), &summary(&mcfg, method, &p, best, &rows))?;
        test_rows.extend(rows.into_iter().filter(|r| r.split == "test"));
    }
    Ok(test_rows)
}

/// Writes the split manifest without training.
pub fn split(cfg: &RunConfig) -> Result<String, CliError> {
    let p = prepare(cfg, false)?;
    let path = write_split(cfg, &p)?;
    let s = &p.split;
    Ok(format!(
        "{}: train {}+{} / val {}+{} / test {}+{} (positives+negatives)\n",
        path.display(),
        s.train_pos.len(),
        s.train_neg.len(),
        s.val_pos.len(),
        s.val_neg.len(),
        s.test_pos.len(),
        s.test_neg.len()
    ))
}

fn check_architecture(cfg: &RunConfig, predictor: &Predictor<f64>, input_dim: usize, path: &Path) -> Result<(), CliError> {
    if let Predictor::Gnn(model) = predictor {
        let mcfg = cfg.with_method(predictor.method());
        let expected: Architecture = mcfg.train.architecture(input_dim)?;
        if model.architecture() != &expected {
            return Err(CliError::Data(format!(
                "{}: model architecture {:?} does not match the configuration {:?}",
                path.display(),
                model.architecture(),
                expected
            )));
        }
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<Predictor<f64>, CliError> {
    read_model(&read(path)?).map_err(|e| match e {
        gatlink::Error::SchemaVersion { .. } | gatlink::Error::ModelFormat(_) => {
            CliError::Data(format!("{}: {e}", path.display()))
        }
        other => other.into(),
    })
}

pub enum ModelChoice {
    /// A specific model file; the method is read from it.
    File(PathBuf),
    /// Named methods from the run directory. With `train_missing`, methods
    /// without a saved model are fitted in memory.
    Methods { methods: Vec<Method>, train_missing: bool },
}

/// Scores the requested models on the manifest's pairs. Read-only.
pub fn evaluate(cfg: &RunConfig, choice: &ModelChoice, which: SplitKind) -> Result<Vec<MetricsReport>, CliError> {
    let p = prepare(cfg, true)?;
    let dir = cfg.run_dir();
    let mut predictors: Vec<(Method, Predictor<f64>)> = Vec::new();
    match choice {
        ModelChoice::File(path) => {
            let predictor = load_model(path)?;
            check_architecture(cfg, &predictor, p.mp.feature_dim(), path)?;
            predictors.push((predictor.method(), predictor));
        }
        ModelChoice::Methods { methods, train_missing } => {
            for &method in methods {
                let path = dir.join(model_file(method));
                let predictor = if path.exists() {
                    let predictor = load_model(&path)?;
                    if predictor.method() != method {
                        return Err(CliError::Data(format!("{} holds a {} model", path.display(), predictor.method())));
                    }
                    check_architecture(cfg, &predictor, p.mp.feature_dim(), &path)?;
                    predictor
                } else if method == Method::Pa {
                    Predictor::Pa
                } else if *train_missing {
                    fit(&p.mp, &p.split, &cfg.with_method(method).train)?.0
                } else {
                    return Err(CliError::io(&path, std::io::Error::new(std::io::ErrorKind::NotFound, "no saved model; run `gatlink train` first")));
                };
                predictors.push((method, predictor));
            }
        }
    }
    predictors
        .iter()
        .map(|(m, pred)| Ok(evaluate_model(pred, m.name(), &p.mp, &p.split, which)?))
        .collect()
}

pub fn render_reports(reports: &[MetricsReport], format: Format) -> String {
    match format {
        Format::Table => render_table(reports),
        Format::Json => render_json_lines(reports),
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ExplainLine<'a> {
    Attention {
        #[serde(flatten)]
        attention: &'a AttentionRecord,
        destination_label: String,
        source_label: String,
    },
    Rank {
        #[serde(flatten)]
        node: &'a RankedNode,
    },
}

/// Writes every attention coefficient plus the top-k ranking to the run's
/// attention report and returns the ranking as text.
pub fn explain(cfg: &RunConfig, model: Option<&Path>, top_k: usize) -> Result<String, CliError> {
    let p = prepare(cfg, true)?;
    let path = model
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.run_dir().join(model_file(Method::CrimeGat)));
    let predictor = load_model(&path)?;
    let gnn = match &predictor {
        Predictor::Gnn(gnn) if predictor.method() == Method::CrimeGat => gnn,
        other => {
            return Err(CliError::Usage(format!(
                "{}: {} model has no attention; explain needs a crimegat model",
                path.display(),
                other.method()
            )))
        }
    };
    let records = attention_records(gnn, &p.mp)?;
    let ranking = top_nodes(&records, &p.mp, top_k);
    let mut report = String::new();
    for r in &records {
        let line = ExplainLine::Attention {
            attention: r,
            destination_label: p.mp.label(r.destination),
            source_label: p.mp.label(r.source),
        };
        report.push_str(&serde_json::to_string(&line).expect("plain record"));
        report.push('\n');
    }
    for node in &ranking {
        report.push_str(&serde_json::to_string(&ExplainLine::Rank { node }).expect("plain record"));
        report.push('\n');
    }
    let out_path = cfg.run_dir().join(ATTENTION_FILE);
    write(&out_path, &report)?;

    let width = ranking.iter().map(|r| r.label.len()).max().unwrap_or(4).max(4);
    let mut text = format!("{:<4}  {:<width$}  received_attention\n", "rank", "node");
    for r in &ranking {
        let _ = writeln!(text, "{:<4}  {:<width$}  {:.6}", r.rank, r.label, r.received_attention);
    }
    let _ = writeln!(text, "attention report: {}", out_path.display());
    Ok(text)
}

/// Materializes the configured SBM as an edge file and a feature file.
pub fn synth(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    cfg.validate()?;
    cfg.sbm.validate()?;
    let g: Graph<f64> = gatlink::graph::generate_sbm(&cfg.sbm, cfg.sbm_seed())?;
    let stem = format!("sbm-seed{}", cfg.sbm_seed());
    let mut edges = String::from("# nodes first, then one undirected edge per line\n");
    for v in 0..g.num_nodes() {
        let _ = writeln!(edges, "{v}");
    }
    for (u, v) in g.edges() {
        let _ = writeln!(edges, "{u} {v}");
    }
    let mut feats = String::new();
    for v in 0..g.num_nodes() {
        let row: Vec<String> = g.features().row(v).iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(feats, "{v} {}", row.join(" "));
    }
    let edge_path = out.join(format!("{stem}.edges"));
    let feat_path = out.join(format!("{stem}.features"));
    write(&edge_path, &edges)?;
    write(&feat_path, &feats)?;
    Ok(format!(
        "{} nodes, {} edges\n{}\n{}\n",
        g.num_nodes(),
        g.num_edges(),
        edge_path.display(),
        feat_path.display()
    ))
}
