//! Edge-list, CSV and feature-file ingestion.
//!
//! Node tokens are integers when every token in the edge source parses as one
//! (ids `0..=max`), otherwise names numbered in first-seen order. In the
//! whitespace format a line holding a single token declares a node without
//! edges, which is how isolated nodes are expressed.

use std::collections::HashMap;
use std::io::BufRead;
use std::str::FromStr;

use super::{default_features, Edge, Graph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeFormat {
    /// Two whitespace-separated tokens per line, `#` comments.
    EdgeList,
    /// Header `source,target`; a `label` column, if present, is ignored.
    Csv,
}

impl FromStr for EdgeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edgelist" => Ok(EdgeFormat::EdgeList),
            "csv" => Ok(EdgeFormat::Csv),
            other => Err(Error::invalid(format!(
                "unknown edge format `{other}` (expected edgelist or csv)"
            ))),
        }
    }
}

struct RawLine {
    line: usize,
    tokens: Vec<String>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn read_edgelist(source: &mut dyn BufRead) -> Result<Vec<RawLine>> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let tokens: Vec<String> = strip_comment(&line)
            .split_whitespace()
            .map(str::to_owned)
            .collect();
        match tokens.len() {
            0 => {}
            1 | 2 => out.push(RawLine { line: i + 1, tokens }),
            n => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected two tokens, found {n}"),
                })
            }
        }
    }
    Ok(out)
}

fn read_csv(source: &mut dyn BufRead) -> Result<Vec<RawLine>> {
    let mut out = Vec::new();
    let mut columns: Option<(usize, usize, usize)> = None;
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let body = strip_comment(&line).trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        let Some((src, dst, width)) = columns else {
            let find = |name: &str| fields.iter().position(|f| f.eq_ignore_ascii_case(name));
            match (find("source"), find("target")) {
                (Some(s), Some(t)) => columns = Some((s, t, fields.len())),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "CSV header must name `source` and `target` columns".into(),
                    })
                }
            }
            continue;
        };
        if fields.len() != width {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        if fields[src].is_empty() || fields[dst].is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "empty node token".into(),
            });
        }
        out.push(RawLine {
            line: i + 1,
            tokens: vec![fields[src].to_owned(), fields[dst].to_owned()],
        });
    }
    if columns.is_none() {
        return Err(Error::Parse {
            line: 0,
            message: "missing CSV header".into(),
        });
    }
    Ok(out)
}

/// Token-to-id mapping shared by the edge and feature sources.
enum NodeIds {
    Integer(usize),
    Named(Vec<String>, HashMap<String, usize>),
}

impl NodeIds {
    fn build(lines: &[RawLine]) -> Self {
        let all_int = lines
            .iter()
            .flat_map(|l| &l.tokens)
            .all(|t| t.parse::<usize>().is_ok());
        if all_int {
            let max = lines
                .iter()
                .flat_map(|l| &l.tokens)
                .filter_map(|t| t.parse::<usize>().ok())
                .max();
            return NodeIds::Integer(max.map_or(0, |m| m + 1));
        }
        let mut names = Vec::new();
        let mut index = HashMap::new();
        for t in lines.iter().flat_map(|l| &l.tokens) {
            if !index.contains_key(t) {
                index.insert(t.clone(), names.len());
                names.push(t.clone());
            }
        }
        NodeIds::Named(names, index)
    }

    fn len(&self) -> usize {
        match self {
            NodeIds::Integer(n) => *n,
            NodeIds::Named(names, _) => names.len(),
        }
    }

    fn lookup(&self, token: &str) -> Option<usize> {
        match self {
            NodeIds::Integer(n) => token.parse::<usize>().ok().filter(|id| id < n),
            NodeIds::Named(_, index) => index.get(token).copied(),
        }
    }

    fn into_names(self) -> Option<Vec<String>> {
        match self {
            NodeIds::Integer(_) => None,
            NodeIds::Named(names, _) => Some(names),
        }
    }
}

fn read_features<T: Scalar>(
    source: &mut dyn BufRead,
    ids: &NodeIds,
) -> Result<Matrix<T>> {
    let n = ids.len();
    let mut rows: Vec<Option<Vec<T>>> = vec![None; n];
    let mut dim: Option<usize> = None;
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let mut tokens = strip_comment(&line).split_whitespace();
        let Some(node) = tokens.next() else { continue };
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let id = ids
            .lookup(node)
            .ok_or_else(|| parse_err(format!("unknown node `{node}` in feature file")))?;
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(T::lit)
                    .ok_or_else(|| parse_err(format!("invalid feature value `{t}`")))
            })
            .collect::<Result<Vec<T>>>()?;
        if values.is_empty() {
            return Err(parse_err(format!("node `{node}` has no feature values")));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(parse_err(format!(
                    "expected {d} feature values, found {}",
                    values.len()
                )))
            }
            _ => {}
        }
        if rows[id].replace(values).is_some() {
            return Err(parse_err(format!("duplicate features for node `{node}`")));
        }
    }
    let d = dim.unwrap_or(0);
    let mut m = Matrix::zeros(n, d);
    for (v, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("feature file has no row for node {v}"),
        })?;
        m.row_mut(v).copy_from_slice(&row);
    }
    Ok(m)
}

/// Reads an undirected graph. Duplicate edges collapse; a self-loop is an error.
/// Without a feature source the features fall back to [`default_features`].
pub fn load_edge_list<T: Scalar>(
    source: &mut dyn BufRead,
    format: EdgeFormat,
    feature_source: Option<&mut dyn BufRead>,
) -> Result<Graph<T>> {
    let lines = match format {
        EdgeFormat::EdgeList => read_edgelist(source)?,
        EdgeFormat::Csv => read_csv(source)?,
    };
    let ids = NodeIds::build(&lines);
    let mut edges: Vec<Edge> = Vec::with_capacity(lines.len());
    for l in &lines {
        if let [a, b] = l.tokens.as_slice() {
            if a == b {
                return Err(Error::SelfLoop {
                    line: l.line,
                    node: a.clone(),
                });
            }
            // Tokens came from these same lines, so lookup cannot fail.
            let u = ids.lookup(a).expect("token was indexed");
            let v = ids.lookup(b).expect("token was indexed");
            edges.push((u, v));
        }
    }
    let n = ids.len();
    let features = match feature_source {
        Some(src) => read_features(src, &ids)?,
        None => default_features(n, &edges),
    };
    Graph::from_edges(n, &edges, features, ids.into_names())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Graph<f64>> {
        load_edge_list(&mut text.as_bytes(), EdgeFormat::EdgeList, None)
    }

    #[test]
    fn reads_integer_edges() {
        let g = load("0 1\n1 2").unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.degrees(), vec![1, 2, 1]);
        assert!(g.names().is_none());
    }

    #[test]
    fn dedupes_edges() {
        let g = load("0 1\n0 1\n1 0\n").unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn comments_blank_lines_and_declared_nodes() {
        let g = load("# header\n\na b # trailing\nc\n").unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.names().unwrap(), &["a", "b", "c"]);
        assert_eq!(g.degree(2), 0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match load("0 1\n1 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn self_loop_rejected() {
        assert!(matches!(load("0 1\n2 2\n"), Err(Error::SelfLoop { line: 2, .. })));
    }

    #[test]
    fn csv_with_label_column() {
        let text = "label,source,target\n1,x,y\n0,y,z\n";
        let g: Graph<f64> = load_edge_list(&mut text.as_bytes(), EdgeFormat::Csv, None).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.label(1), "y");
        assert!(load_edge_list::<f64>(&mut "a,b\n1,2\n".as_bytes(), EdgeFormat::Csv, None).is_err());
        assert!(matches!(
            load_edge_list::<f64>(&mut "source,target\n1\n".as_bytes(), EdgeFormat::Csv, None),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn feature_file() {
        let mut feats = "b 1.5 2\na 0 -1\n".as_bytes();
        let g: Graph<f64> =
            load_edge_list(&mut "a b\n".as_bytes(), EdgeFormat::EdgeList, Some(&mut feats)).unwrap();
        assert_eq!(g.features().row(0), &[0.0, -1.0]);
        assert_eq!(g.features().row(1), &[1.5, 2.0]);

        let mut missing = "a 1\n".as_bytes();
        assert!(load_edge_list::<f64>(&mut "a b\n".as_bytes(), EdgeFormat::EdgeList, Some(&mut missing)).is_err());
        let mut ragged = "a 1\nb 1 2\n".as_bytes();
        assert!(matches!(
            load_edge_list::<f64>(&mut "a b\n".as_bytes(), EdgeFormat::EdgeList, Some(&mut ragged)),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
