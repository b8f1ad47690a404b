//! Split manifest: one JSON object per line, a header then one line per pair.

use serde::{Deserialize, Serialize};

use gatlink::graph::{Edge, EdgeSplit, SplitKind};

use crate::error::CliError;

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header { schema: u32, seed: u64, num_nodes: usize },
    Pair { split: String, label: bool, source: usize, target: usize },
}

fn groups(split: &EdgeSplit) -> [(SplitKind, bool, &Vec<Edge>); 6] {
    [
        (SplitKind::Train, true, &split.train_pos),
        (SplitKind::Train, false, &split.train_neg),
        (SplitKind::Val, true, &split.val_pos),
        (SplitKind::Val, false, &split.val_neg),
        (SplitKind::Test, true, &split.test_pos),
        (SplitKind::Test, false, &split.test_neg),
    ]
}

pub fn write_manifest(split: &EdgeSplit, num_nodes: usize) -> String {
    let mut out = String::new();
    let mut push = |l: &Line| {
        out.push_str(&serde_json::to_string(l).expect("plain record"));
        out.push('\n');
    };
    push(&Line::Header {
        schema: MANIFEST_SCHEMA,
        seed: split.seed,
        num_nodes,
    });
    for (kind, label, pairs) in groups(split) {
        for &(source, target) in pairs {
            push(&Line::Pair {
                split: kind.name().to_string(),
                label,
                source,
                target,
            });
        }
    }
    out
}

/// Parses a manifest; pair ids must be below `num_nodes` of the graph it is used with.
pub fn read_manifest(text: &str, num_nodes: usize) -> Result<EdgeSplit, CliError> {
    let bad = |line: usize, msg: String| CliError::Data(format!("split manifest line {line}: {msg}"));
    let mut split = EdgeSplit::default();
    let mut header = false;
    for (i, raw) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let no = i + 1;
        let line: Line = serde_json::from_str(raw).map_err(|e| bad(no, e.to_string()))?;
        match line {
            Line::Header { schema, seed, num_nodes: n } => {
                if header {
                    return Err(bad(no, "duplicate header".into()));
                }
                if schema != MANIFEST_SCHEMA {
                    return Err(bad(no, format!("schema {schema}, expected {MANIFEST_SCHEMA}")));
                }
                if n != num_nodes {
                    return Err(bad(no, format!("manifest is for {n} nodes, dataset has {num_nodes}")));
                }
                split.seed = seed;
                header = true;
            }
            Line::Pair { split: which, label, source, target } => {
                if !header {
                    return Err(bad(no, "pair before header".into()));
                }
                if source >= num_nodes || target >= num_nodes || source == target {
                    return Err(bad(no, format!("invalid pair ({source}, {target})")));
                }
                let slot = match (which.as_str(), label) {
                    ("train", true) => &mut split.train_pos,
                    ("train", false) => &mut split.train_neg,
                    ("val", true) => &mut split.val_pos,
                    ("val", false) => &mut split.val_neg,
                    ("test", true) => &mut split.test_pos,
                    ("test", false) => &mut split.test_neg,
                    (other, _) => return Err(bad(no, format!("unknown split `{other}`"))),
                };
                slot.push((source, target));
            }
        }
    }
    if !header {
        return Err(CliError::Data("split manifest has no header".into()));
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gatlink::graph::{florentine, SplitRatios};

    #[test]
    fn round_trip() {
        let g = florentine::<f64>().unwrap();
        let split = EdgeSplit::new(&g, SplitRatios::default(), 1.0, 4).unwrap();
        let text = write_manifest(&split, g.num_nodes());
        assert_eq!(read_manifest(&text, g.num_nodes()).unwrap(), split);
        assert!(read_manifest(&text, 3).is_err());
        assert!(read_manifest("", 16).is_err());
        let bad = text.replacen("\"val\"", "\"dev\"", 1);
        assert!(read_manifest(&bad, 16).is_err());
    }
}
