//! Plain-text model files.
//!
//! ```text
//! gatlink-model 1
//! method crimegat
//! arch encoder=gat dims=5,16,16 heads=1 slope=0.2 scorer=dot
//! buffer 80 1.5e-1 -3.2e-2 ...
//! ```
//!
//! Graph models list one `buffer` line per parameter buffer in visiting order.
//! SVM files carry `weights`, `bias`, `mean` and `scale` lines; preferential
//! attachment has no parameters. Values use the shortest exponent form that
//! parses back to the identical value.

use std::fmt::Write as _;

use crate::baselines::{LinearSvm, Standardizer};
use crate::error::{Error, Result};
use crate::linkpred::ScorerKind;
use crate::model::{Architecture, EncoderKind, ModelParams};
use crate::param::Trainable;
use crate::scalar::Scalar;
use crate::train::{Method, Predictor};

pub const MAGIC: &str = "gatlink-model";
pub const SCHEMA_VERSION: u32 = 1;

fn join<T: Scalar>(values: &[T]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:e}");
    }
    s
}

pub fn write_model<T: Scalar>(predictor: &Predictor<T>) -> String {
    let mut out = format!("{MAGIC} {SCHEMA_VERSION}\nmethod {}\n", predictor.method());
    match predictor {
        Predictor::Gnn(model) => {
            let a = model.architecture();
            let dims: Vec<String> = a.dims.iter().map(usize::to_string).collect();
            let _ = writeln!(
                out,
                "arch encoder={} dims={} heads={} slope={:e} scorer={}",
                a.encoder,
                dims.join(","),
                a.heads,
                a.slope,
                a.scorer.name()
            );
            let mut model = model.clone();
            model.visit_params(&mut |p, _| {
                let _ = writeln!(out, "buffer {} {}", p.len(), join(p));
            });
        }
        Predictor::Svm(svm) => {
            let _ = writeln!(out, "weights {}", join(&svm.weights));
            let _ = writeln!(out, "bias {:e}", svm.bias);
            let _ = writeln!(out, "mean {}", join(&svm.standardizer.mean));
            let _ = writeln!(out, "scale {}", join(&svm.standardizer.scale));
        }
        Predictor::Pa => {}
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::ModelFormat(format!("line {line}: {msg}"))
}

fn parse_values<T: Scalar>(line: usize, tokens: &[&str]) -> Result<Vec<T>> {
    tokens
        .iter()
        .map(|t| {
            let x: T = t.parse().map_err(|_| bad(line, format!("bad number `{t}`")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(bad(line, format!("non-finite value `{t}`")))
            }
        })
        .collect()
}

/// Reads a `key rest...` line, returning `rest` tokens.
fn expect_key<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, Vec<&'a str>)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| Error::ModelFormat(format!("missing `{key}` line")))?;
    let mut tokens = line.split_whitespace();
    match tokens.next() {
        Some(k) if k == key => Ok((no, tokens.collect())),
        other => Err(bad(no, format!("expected `{key}`, found `{}`", other.unwrap_or("")))),
    }
}

fn parse_arch(line: usize, tokens: &[&str]) -> Result<Architecture> {
    let (mut encoder, mut dims, mut heads, mut slope, mut scorer) = (None, None, None, None, None);
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| bad(line, format!("expected key=value, found `{tok}`")))?;
        let num_err = || bad(line, format!("bad value for `{k}`: `{v}`"));
        match k {
            "encoder" => encoder = Some(v.parse::<EncoderKind>().map_err(|e| bad(line, e))?),
            "dims" => {
                dims = Some(
                    v.split(',')
                        .map(|d| d.parse::<usize>().map_err(|_| num_err()))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "heads" => heads = Some(v.parse::<usize>().map_err(|_| num_err())?),
            "slope" => slope = Some(v.parse::<f64>().map_err(|_| num_err())?),
            "scorer" => scorer = Some(v.parse::<ScorerKind>().map_err(|e| bad(line, e))?),
            other => return Err(bad(line, format!("unknown architecture key `{other}`"))),
        }
    }
    let missing = |k: &str| bad(line, format!("architecture is missing `{k}`"));
    let arch = Architecture {
        encoder: encoder.ok_or_else(|| missing("encoder"))?,
        dims: dims.ok_or_else(|| missing("dims"))?,
        heads: heads.ok_or_else(|| missing("heads"))?,
        slope: slope.ok_or_else(|| missing("slope"))?,
        scorer: scorer.ok_or_else(|| missing("scorer"))?,
    };
    arch.validate().map_err(|e| bad(line, e))?;
    Ok(arch)
}

pub fn read_model<T: Scalar>(text: &str) -> Result<Predictor<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (_, header) = lines.next().ok_or_else(|| Error::ModelFormat("empty file".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(Error::ModelFormat(format!("not a model file (header `{header}`)")));
    }
    let version = parts.next().unwrap_or("").to_string();
    if version.parse::<u32>() != Ok(SCHEMA_VERSION) {
        return Err(Error::SchemaVersion {
            found: version,
            expected: SCHEMA_VERSION,
        });
    }

    let (no, method) = expect_key(&mut lines, "method")?;
    let method: Method = match method.as_slice() {
        [m] => m.parse().map_err(|e| bad(no, e))?,
        _ => return Err(bad(no, "expected one method name")),
    };

    let predictor = match method {
        Method::Pa => Predictor::Pa,
        Method::Svm => {
            let (no, w) = expect_key(&mut lines, "weights")?;
            let weights = parse_values::<T>(no, &w)?;
            let (no, b) = expect_key(&mut lines, "bias")?;
            let bias = match parse_values::<T>(no, &b)?.as_slice() {
                [b] => *b,
                _ => return Err(bad(no, "expected one bias value")),
            };
            let (no, m) = expect_key(&mut lines, "mean")?;
            let mean = parse_values::<T>(no, &m)?;
            let (no2, s) = expect_key(&mut lines, "scale")?;
            let scale = parse_values::<T>(no2, &s)?;
            if mean.len() != weights.len() || scale.len() != weights.len() {
                return Err(bad(no, "weights, mean and scale lengths differ"));
            }
            if scale.iter().any(|&x| x <= T::zero()) {
                return Err(bad(no2, "scale entries must be positive"));
            }
            Predictor::Svm(LinearSvm {
                weights,
                bias,
                standardizer: Standardizer { mean, scale },
            })
        }
        _ => {
            let (no, tokens) = expect_key(&mut lines, "arch")?;
            let arch = parse_arch(no, &tokens)?;
            if Some(arch.encoder) != method.encoder() {
                return Err(bad(no, format!("encoder {} does not match method {method}", arch.encoder)));
            }
            let mut model = ModelParams::<T>::init(&arch, 0)?;
            let mut sizes = Vec::new();
            model.visit_params(&mut |p, _| sizes.push(p.len()));
            let mut flat = Vec::with_capacity(sizes.iter().sum());
            for &size in &sizes {
                let (no, tokens) = expect_key(&mut lines, "buffer")?;
                let (len, values) = tokens
                    .split_first()
                    .ok_or_else(|| bad(no, "buffer line needs a length"))?;
                if len.parse::<usize>().ok() != Some(size) || values.len() != size {
                    return Err(bad(
                        no,
                        format!("buffer should hold {size} values for this architecture"),
                    ));
                }
                flat.extend(parse_values::<T>(no, values)?);
            }
            model.set_flat_params(&flat)?;
            Predictor::Gnn(model)
        }
    };
    if let Some((no, _)) = lines.next() {
        return Err(bad(no, "unexpected trailing content"));
    }
    Ok(predictor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gnn(encoder: EncoderKind, scorer: ScorerKind) -> Predictor<f64> {
        let arch = Architecture {
            encoder,
            dims: vec![3, 4, 2],
            heads: if encoder == EncoderKind::Gat { 2 } else { 1 },
            slope: 0.2,
            scorer,
        };
        Predictor::Gnn(ModelParams::init(&arch, 17).unwrap())
    }

    #[test]
    fn round_trips_are_exact() {
        let mut all = vec![Predictor::Pa];
        for e in [EncoderKind::Gat, EncoderKind::Gcn, EncoderKind::Sage] {
            for s in [ScorerKind::Dot, ScorerKind::HadamardLinear] {
                all.push(gnn(e, s));
            }
        }
        all.push(Predictor::Svm(LinearSvm {
            weights: vec![0.1, -1e-300, 3.0],
            bias: -0.5,
            standardizer: Standardizer {
                mean: vec![1.0, 2.0, 1.0 / 3.0],
                scale: vec![1.0, 0.25, 7.0],
            },
        }));
        for p in all {
            let text = write_model(&p);
            let back: Predictor<f64> = read_model(&text).unwrap();
            assert_eq!(back, p);
            assert_eq!(write_model(&back), text);
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let arch = Architecture::new(EncoderKind::Gat, 3);
        let p = Predictor::Gnn(ModelParams::<f32>::init(&arch, 2).unwrap());
        assert_eq!(read_model::<f32>(&write_model(&p)).unwrap(), p);
    }

    #[test]
    fn schema_version_mismatch() {
        let text = write_model(&gnn(EncoderKind::Gat, ScorerKind::Dot)).replacen("gatlink-model 1", "gatlink-model 2", 1);
        assert!(matches!(
            read_model::<f64>(&text),
            Err(Error::SchemaVersion { expected: 1, .. })
        ));
    }

    #[test]
    fn malformed_files_are_rejected() {
        let good = write_model(&gnn(EncoderKind::Gcn, ScorerKind::Dot));
        let cases = [
            String::new(),
            "hello 1\n".to_string(),
            good.replacen("method gcn", "method gat", 1),
            good.replacen("dims=3,4,2", "dims=3,4,3", 1),
            format!("{good}buffer 1 0\n"),
            good.lines().take(4).collect::<Vec<_>>().join("\n"),
            good.replacen("buffer 12 ", "buffer 12 x", 1),
            good.replacen("scorer=dot", "scorer=cosine", 1),
        ];
        for text in cases {
            assert!(read_model::<f64>(&text).is_err(), "{text}");
        }
    }
}
