//! Precision, recall, F1 and ROC AUC, threshold selection and report rendering.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Confusion {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn check_inputs(op: &'static str, scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Length {
            op,
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::Empty(op));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite(op));
    }
    Ok(())
}

fn check_two_classes(op: &'static str, labels: &[bool]) -> Result<()> {
    if labels.contains(&true) && labels.contains(&false) {
        Ok(())
    } else {
        Err(Error::SingleClass(op))
    }
}

/// Predicts positive iff `score >= t`. Zero denominators give 0.
pub fn confusion_at_threshold(scores: &[f64], labels: &[bool], t: f64) -> Result<Confusion> {
    check_inputs("confusion_at_threshold", scores, labels)?;
    let mut c = Counts::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= t, y) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    Ok(Confusion {
        precision,
        recall,
        f1: f1_score(precision, recall),
        counts: c,
    })
}

/// Indices sorted by ascending score.
fn sorted_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    order
}

/// Mann-Whitney statistic with midranks for ties.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_inputs("auc_roc", scores, labels)?;
    check_two_classes("auc_roc", labels)?;
    let order = sorted_order(scores);
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let positives = order[i..=j].iter().filter(|&&k| labels[k]).count();
        rank_sum += mid * positives as f64;
        i = j + 1;
    }
    let p = labels.iter().filter(|&&y| y).count() as f64;
    let n = labels.len() as f64 - p;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Candidate thresholds: `-inf`, midpoints of consecutive distinct scores, `+inf`,
/// in ascending order.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len() + 1);
    out.push(f64::NEG_INFINITY);
    out.extend(sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(f64::INFINITY);
    out
}

/// Candidate maximizing F1; ties go to the smallest threshold.
pub fn select_threshold(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_inputs("select_threshold", scores, labels)?;
    check_two_classes("select_threshold", labels)?;
    let mut best = (f64::NEG_INFINITY, -1.0);
    for t in candidate_thresholds(scores) {
        let f1 = confusion_at_threshold(scores, labels, t)?.f1;
        if f1 > best.1 {
            best = (t, f1);
        }
    }
    Ok(best.0)
}

/// One table row: a method's metrics on one split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub split: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc_roc: f64,
    #[serde(with = "crate::metrics::extended_float")]
    pub threshold: f64,
    pub counts: Counts,
}

impl MetricsReport {
    /// Thresholds `scores` at `t` and computes all four metrics.
    pub fn compute(method: &str, split: &str, scores: &[f64], labels: &[bool], t: f64) -> Result<Self> {
        let c = confusion_at_threshold(scores, labels, t)?;
        Ok(Self {
            method: method.to_string(),
            split: split.to_string(),
            precision: c.precision,
            recall: c.recall,
            f1: c.f1,
            auc_roc: auc_roc(scores, labels)?,
            threshold: t,
            counts: c.counts,
        })
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report fields are serializable")
    }
}

/// Serializes infinite thresholds as the strings `"inf"` / `"-inf"`.
pub mod extended_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else if *x < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("bad float `{other}`"))),
            },
        }
    }
}

/// Aligned plain-text table with columns Method, Precision, Recall, F1-Score, AUC-ROC.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let headers = ["Method", "Precision", "Recall", "F1-Score", "AUC-ROC"];
    let rows: Vec<[String; 5]> = reports
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                format!("{:.4}", r.precision),
                format!("{:.4}", r.recall),
                format!("{:.4}", r.f1),
                format!("{:.4}", r.auc_roc),
            ]
        })
        .collect();
    let mut widths = headers.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let mut s = format!("{:<w$}", cells[0], w = widths[0]);
        for (cell, w) in cells[1..].iter().zip(&widths[1..]) {
            let _ = write!(s, "  {:>w$}", cell, w = *w);
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&headers);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &rows {
        line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

/// One JSON object per line.
pub fn render_json_lines(reports: &[MetricsReport]) -> String {
    reports.iter().map(|r| r.to_json_line() + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{self, Stream};
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            for (j, &yj) in labels.iter().enumerate() {
                if yi && !yj {
                    pairs += 1.0;
                    total += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        Ordering::Greater => 1.0,
                        Ordering::Equal => 0.5,
                        Ordering::Less => 0.0,
                    };
                }
            }
        }
        total / pairs
    }

    #[test]
    fn confusion_examples() {
        let c = confusion_at_threshold(&[0.9, 0.1], &[true, false], 0.5).unwrap();
        assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        let c = confusion_at_threshold(&[0.1, 0.2], &[true, false], 0.5).unwrap();
        assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
        let c = confusion_at_threshold(&[0.9, 0.8, 0.4], &[true, false, true], 0.5).unwrap();
        assert_eq!(c.counts, Counts { tp: 1, fp: 1, tn: 0, fn_: 1 });
        assert_eq!((c.precision, c.recall, c.f1), (0.5, 0.5, 0.5));
        // Inclusive comparison.
        let c = confusion_at_threshold(&[0.5], &[true], 0.5).unwrap();
        assert_eq!(c.counts.tp, 1);
        assert!(confusion_at_threshold(&[], &[], 0.5).is_err());
        assert!(confusion_at_threshold(&[0.1], &[true, false], 0.5).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_roc(&[0.8, 0.6, 0.4, 0.2], &[true, false, true, false]).unwrap(), 0.75);
        assert_eq!(auc_roc(&[3.0, 2.0, 1.0], &[true, true, false]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        assert!(matches!(auc_roc(&[0.1, 0.2], &[true, true]), Err(Error::SingleClass(_))));
        assert!(auc_roc(&[f64::NAN, 0.2], &[true, false]).is_err());
    }

    #[test]
    fn auc_matches_pairwise_oracle_on_random_instances() {
        let mut rng = seed::rng(3, Stream::Sbm, 1234);
        for case in 0..1000 {
            let n = rng.random_range(2..40);
            // Coarse grid in half the cases forces ties.
            let levels = if case % 2 == 0 { 5 } else { 1_000_000 };
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            labels[0] = true;
            labels[1] = false;
            let fast = auc_roc(&scores, &labels).unwrap();
            assert!((fast - brute_auc(&scores, &labels)).abs() <= 1e-12, "case {case}");
        }
    }

    #[test]
    fn threshold_examples() {
        let t = select_threshold(&[0.9, 0.8, 0.4], &[true, false, true]).unwrap();
        assert!(t < 0.4);
        let c = confusion_at_threshold(&[0.9, 0.8, 0.4], &[true, false, true], t).unwrap();
        assert!((c.f1 - 0.8).abs() < 1e-15);
        let t = select_threshold(&[0.9, 0.7, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert!(t > 0.2 && t < 0.7);
        assert!(select_threshold(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn candidates_include_sentinels_and_midpoints() {
        let c = candidate_thresholds(&[0.4, 0.9, 0.4, 0.8]);
        assert_eq!(c.len(), 4);
        assert_eq!(c[0], f64::NEG_INFINITY);
        assert!((c[1] - 0.6).abs() < 1e-15);
        assert!((c[2] - 0.85).abs() < 1e-15);
        assert_eq!(c[3], f64::INFINITY);
    }

    #[test]
    fn table_has_expected_columns() {
        let r = MetricsReport::compute("pa", "test", &[0.9, 0.1], &[true, false], 0.5).unwrap();
        let table = render_table(std::slice::from_ref(&r));
        let header: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(header, ["Method", "Precision", "Recall", "F1-Score", "AUC-ROC"]);
        assert!(table.lines().nth(2).unwrap().starts_with("pa"));
        let json = r.to_json_line();
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let mut inf = r;
        inf.threshold = f64::NEG_INFINITY;
        assert!(inf.to_json_line().contains("\"-inf\""));
        let back: MetricsReport = serde_json::from_str(&inf.to_json_line()).unwrap();
        assert_eq!(back.threshold, f64::NEG_INFINITY);
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (2usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec(-100i32..100, n).prop_map(|v| v.into_iter().map(|x| x as f64 / 10.0).collect()),
                prop::collection::vec(any::<bool>(), n).prop_map(|mut l| {
                    l[0] = true;
                    l[1] = false;
                    l
                }),
            )
        })
    }

    proptest! {
        #[test]
        fn auc_invariant_under_increasing_map((s, l) in instance()) {
            let mapped: Vec<f64> = s.iter().map(|x| (x * 0.7).exp() + 3.0 * x).collect();
            prop_assert_eq!(auc_roc(&s, &l).unwrap(), auc_roc(&mapped, &l).unwrap());
        }

        #[test]
        fn auc_of_negated_scores_complements((s, l) in instance()) {
            let mut sorted = s.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sorted.dedup();
            prop_assume!(sorted.len() == s.len());
            let neg: Vec<f64> = s.iter().map(|x| -x).collect();
            prop_assert!((auc_roc(&s, &l).unwrap() + auc_roc(&neg, &l).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn counts_total_input_size((s, l) in instance(), t in -12.0f64..12.0) {
            let c = confusion_at_threshold(&s, &l, t).unwrap();
            prop_assert_eq!(c.counts.total(), s.len());
            prop_assert!((0.0..=1.0).contains(&c.f1));
        }

        #[test]
        fn selected_threshold_is_best_and_smallest((s, l) in instance()) {
            let t = select_threshold(&s, &l).unwrap();
            let f = confusion_at_threshold(&s, &l, t).unwrap().f1;
            for c in candidate_thresholds(&s) {
                let fc = confusion_at_threshold(&s, &l, c).unwrap().f1;
                prop_assert!(fc <= f);
                if c < t {
                    prop_assert!(fc < f);
                }
            }
        }
    }
}
