//! Command-line driver: argument parsing, configuration layering, seed sweeps.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gatlink::graph::SplitKind;
use gatlink::{Method, MetricsReport};

use commands::{Format, ModelChoice};
use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gatlink", version, about = "Graph-attention link prediction: train, evaluate, explain")]
pub struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(short, long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Overrides a configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Shorthand for `--set dataset=...`.
    #[arg(long, global = true)]
    pub dataset: Option<String>,
    /// Shorthand for `--set method=...`.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Shorthand for `--set seed=...`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shorthand for `--set output_dir=...`.
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and write model, split manifest, history, metrics and summary.
    Train {
        /// Run these seeds concurrently instead of `seed`.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Methods to train (default: the configured method).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Train all five methods.
        #[arg(long)]
        all: bool,
    },
    /// Score saved models on the split manifest and print a metrics table.
    Evaluate {
        /// A model file to evaluate instead of the run directory's.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Methods whose saved models to score (default: the configured method).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Every method; those without a saved model are fitted in memory.
        #[arg(long)]
        all: bool,
        /// Evaluate these seeds' run directories instead of `seed`.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Split to report.
        #[arg(long, value_enum, default_value = "test")]
        split: WhichSplit,
        /// Output format.
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
    },
    /// Export attention coefficients and rank nodes by received attention.
    Explain {
        /// A GAT model file (default: the run directory's crimegat model).
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Number of nodes in the printed ranking.
        #[arg(long, default_value_t = 5)]
        top_k: usize,
    },
    /// Write the configured SBM as edge and feature files.
    Synth {
        /// Output directory (default: output_dir).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Write the split manifest without training.
    Split,
    /// Print the effective configuration with every documented key.
    Config,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WhichSplit {
    Val,
    Test,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

/// Defaults, then the config file, then `--set`, then named flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&cli.set)?;
    if let Some(d) = &cli.dataset {
        cfg.set("dataset", d)?;
    }
    if let Some(m) = &cli.method {
        cfg.set("method", m)?;
    }
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    if let Some(o) = &cli.output_dir {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn parse_methods(names: &[String], all: bool, default: Method) -> Result<Vec<Method>, CliError> {
    if all {
        return Ok(Method::ALL.to_vec());
    }
    if names.is_empty() {
        return Ok(vec![default]);
    }
    names
        .iter()
        .map(|n| n.parse().map_err(|e: gatlink::Error| CliError::Usage(e.to_string())))
        .collect()
}

/// Runs `job` for every seed on its own thread; results come back in seed order.
pub fn sweep<R: Send>(
    cfg: &RunConfig,
    seeds: &[u64],
    job: impl Fn(&RunConfig) -> Result<R, CliError> + Sync,
) -> Result<Vec<(u64, R)>, CliError> {
    if seeds.is_empty() {
        return Ok(vec![(cfg.train.seed, job(cfg)?)]);
    }
    let results: Vec<Result<R, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&s| {
                let c = cfg.with_seed(s);
                let job = &job;
                scope.spawn(move || job(&c))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("seed worker panicked"))
            .collect()
    });
    seeds.iter().copied().zip(results).map(|(s, r)| r.map(|r| (s, r))).collect()
}

#[derive(Serialize)]
struct SeededReport<'a> {
    seed: u64,
    #[serde(flatten)]
    report: &'a MetricsReport,
}

fn render_sweep(results: &[(u64, Vec<MetricsReport>)], format: Format, multi: bool) -> String {
    if !multi {
        return commands::render_reports(&results[0].1, format);
    }
    let mut out = String::new();
    for (seed, reports) in results {
        match format {
            Format::Table => {
                out.push_str(&format!("seed {seed}\n"));
                out.push_str(&commands::render_reports(reports, format));
                out.push('\n');
            }
            Format::Json => {
                for report in reports {
                    out.push_str(&serde_json::to_string(&SeededReport { seed: *seed, report }).expect("plain record"));
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Executes a parsed command and returns its stdout text.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Config => Ok(cfg.render()),
        Command::Train { seeds, methods, all } => {
            let methods = parse_methods(methods, *all, cfg.train.method)?;
            let results = sweep(&cfg, seeds, |c| commands::train(c, &methods))?;
            Ok(render_sweep(&results, Format::Table, !seeds.is_empty()))
        }
        Command::Evaluate {
            model,
            methods,
            all,
            seeds,
            split,
            format,
        } => {
            let choice = match model {
                Some(path) => {
                    if *all || !methods.is_empty() {
                        return Err(CliError::Usage("--model cannot be combined with --methods or --all".into()));
                    }
                    ModelChoice::File(path.clone())
                }
                None => ModelChoice::Methods {
                    methods: parse_methods(methods, *all, cfg.train.method)?,
                    train_missing: *all,
                },
            };
            let which = match split {
                WhichSplit::Val => SplitKind::Val,
                WhichSplit::Test => SplitKind::Test,
            };
            let format = match format {
                OutputFormat::Table => Format::Table,
                OutputFormat::Json => Format::Json,
            };
            let results = sweep(&cfg, seeds, |c| commands::evaluate(c, &choice, which))?;
            Ok(render_sweep(&results, format, !seeds.is_empty()))
        }
        Command::Explain { model, top_k } => commands::explain(&cfg, model.as_deref(), *top_k),
        Command::Synth { out } => commands::synth(&cfg, out.as_deref().unwrap_or(&cfg.output_dir)),
        Command::Split => commands::split(&cfg),
    }
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
