//! Resolves the configured dataset to a graph.

use std::fs::File;
use std::io::{BufRead, BufReader};

use gatlink::graph::{florentine, generate_sbm, load_edge_list, Graph};
use gatlink::train::FeatureSource;

use crate::config::{Dataset, RunConfig};
use crate::error::CliError;

pub struct Loaded {
    pub graph: Graph<f64>,
    pub features: FeatureSource,
}

fn open(path: &std::path::Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

pub fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    match &cfg.dataset {
        Dataset::Florentine => Ok(Loaded {
            graph: florentine()?,
            features: FeatureSource::Given,
        }),
        Dataset::Sbm => Ok(Loaded {
            graph: generate_sbm(&cfg.sbm, cfg.sbm_seed())?,
            features: FeatureSource::Given,
        }),
        Dataset::File(path) => {
            let mut edges = open(path)?;
            let mut feature_reader = cfg.features.as_deref().map(open).transpose()?;
            let features = if feature_reader.is_some() {
                FeatureSource::Given
            } else {
                FeatureSource::Structural
            };
            let graph = load_edge_list(
                &mut edges,
                cfg.format,
                feature_reader.as_mut().map(|r| r as &mut dyn BufRead),
            )
            .map_err(|e| match e {
                gatlink::Error::Io(io) => CliError::io(path, io),
                other => CliError::Data(format!("{}: {other}", path.display())),
            })?;
            Ok(Loaded { graph, features })
        }
    }
}
