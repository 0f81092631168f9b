//! Confusion matrix, per-class precision/recall/F1 and the classification report.
//!
//! Rows of the confusion matrix are true classes, columns are predictions.
//! Any `0/0` ratio is reported as `0.0`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    names: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(names: Vec<String>) -> Self {
        let c = names.len();
        Self { names, counts: vec![vec![0; c]; c] }
    }

    /// Tallies `(truth[i], predicted[i])` pairs.
    pub fn from_labels(truth: &[usize], predicted: &[usize], names: Vec<String>) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::InvalidArgument(format!(
                "{} true labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = Self::zeros(names);
        let c = cm.classes();
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= c || p >= c {
                return Err(Error::InvalidArgument(format!("label pair ({t}, {p}) outside 0..{c}")));
            }
            cm.counts[t][p] += 1;
        }
        Ok(cm)
    }

    pub fn from_counts(names: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != names.len() || counts.iter().any(|r| r.len() != names.len()) {
            return Err(Error::Shape(format!("confusion counts must be {0}×{0}", names.len())));
        }
        Ok(Self { names, counts })
    }

    pub fn classes(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    /// Element-wise sum of two matrices over the same classes.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.names != other.names {
            return Err(Error::InvalidArgument("cannot merge matrices over different classes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    /// CSV with a header row and a leading class column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (n, row) in self.names.iter().zip(&self.counts) {
            out.push_str(n);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Tallies `truth`/`predicted` over `classes` classes named by index.
pub fn confusion(truth: &[usize], predicted: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    ConfusionMatrix::from_labels(truth, predicted, (0..classes).map(|i| i.to_string()).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.classes())
        .map(|i| {
            let tp = cm.get(i, i);
            let precision = ratio(tp, cm.col_sum(i));
            let recall = ratio(tp, cm.row_sum(i));
            ClassMetrics { precision, recall, f1: harmonic(precision, recall), support: cm.row_sum(i) }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: f64,
    pub macro_avg: ClassMetrics,
    pub weighted_avg: ClassMetrics,
}

/// Accuracy as trace over total, plus unweighted and support-weighted means.
pub fn aggregate(cm: &ConfusionMatrix) -> Result<Aggregate> {
    let total = cm.total();
    if total == 0 || cm.classes() == 0 {
        return Err(Error::InvalidArgument("cannot aggregate an empty confusion matrix".into()));
    }
    let per = per_class_metrics(cm);
    let c = per.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per.iter().map(f).sum::<f64>() / c;
    let weighted =
        |f: fn(&ClassMetrics) -> f64| per.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / total as f64;
    Ok(Aggregate {
        accuracy: cm.trace() as f64 / total as f64,
        macro_avg: ClassMetrics {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
            support: total,
        },
        weighted_avg: ClassMetrics {
            precision: weighted(|m| m.precision),
            recall: weighted(|m| m.recall),
            f1: weighted(|m| m.f1),
            support: total,
        },
    })
}

/// Per-class rows followed by the aggregate rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub classes: Vec<(String, ClassMetrics)>,
    pub accuracy: f64,
    pub macro_avg: ClassMetrics,
    pub weighted_avg: ClassMetrics,
    pub total: u64,
}

impl Report {
    /// Builds the report, labelling rows with `row_names` (one per class).
    pub fn from_confusion(cm: &ConfusionMatrix, row_names: &[&str]) -> Result<Self> {
        if row_names.len() != cm.classes() {
            return Err(Error::Shape(format!("{} row names for {} classes", row_names.len(), cm.classes())));
        }
        let agg = aggregate(cm)?;
        Ok(Self {
            classes: row_names.iter().map(|n| n.to_string()).zip(per_class_metrics(cm)).collect(),
            accuracy: agg.accuracy,
            macro_avg: agg.macro_avg,
            weighted_avg: agg.weighted_avg,
            total: cm.total(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportStyle {
    /// Fixed-width table rounded to two decimals.
    Text,
    /// Comma-separated, full precision.
    Csv,
}

const ACCURACY_ROW: &str = "Accuracy";
const MACRO_ROW: &str = "Macro Avg";
const WEIGHTED_ROW: &str = "Weighted Avg";
const CSV_HEADER: &str = "class,precision,recall,f1_score,support";

pub fn render_report(report: &Report, style: ReportStyle) -> String {
    match style {
        ReportStyle::Text => render_text(report),
        ReportStyle::Csv => render_csv(report),
    }
}

fn render_text(r: &Report) -> String {
    let width = r.classes.iter().map(|(n, _)| n.len()).chain([WEIGHTED_ROW.len()]).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{:width$}  {:>9}  {:>9}  {:>9}  {:>9}", "", "Precision", "Recall", "F1-score", "Support");
    let row = |out: &mut String, name: &str, m: &ClassMetrics| {
        let _ =
            writeln!(out, "{name:width$}  {:>9.2}  {:>9.2}  {:>9.2}  {:>9}", m.precision, m.recall, m.f1, m.support);
    };
    for (name, m) in &r.classes {
        row(&mut out, name, m);
    }
    let _ = writeln!(out, "{ACCURACY_ROW:width$}  {:>9}  {:>9}  {:>9.2}  {:>9}", "", "", r.accuracy, r.total);
    row(&mut out, MACRO_ROW, &r.macro_avg);
    row(&mut out, WEIGHTED_ROW, &r.weighted_avg);
    out
}

fn render_csv(r: &Report) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    let row = |out: &mut String, name: &str, m: &ClassMetrics| {
        let _ = writeln!(out, "{name},{},{},{},{}", m.precision, m.recall, m.f1, m.support);
    };
    for (name, m) in &r.classes {
        row(&mut out, name, m);
    }
    let _ = writeln!(out, "{ACCURACY_ROW},,,{},{}", r.accuracy, r.total);
    row(&mut out, MACRO_ROW, &r.macro_avg);
    row(&mut out, WEIGHTED_ROW, &r.weighted_avg);
    out
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize) -> Result<T> {
    field.trim().parse().map_err(|_| Error::InvalidArgument(format!("report line {line}: cannot parse {field:?}")))
}

/// Reads back the CSV produced by [`render_report`].
pub fn parse_report_csv(text: &str) -> Result<Report> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::InvalidArgument("report csv is missing its header".into())),
    }
    let rows: Vec<(usize, Vec<&str>)> = lines.map(|(i, l)| (i + 1, l.split(',').collect())).collect();
    if rows.len() < 3 || rows.iter().any(|(_, f)| f.len() != 5) {
        return Err(Error::InvalidArgument("report csv rows must have 5 fields".into()));
    }
    let metrics = |(line, f): &(usize, Vec<&str>)| -> Result<ClassMetrics> {
        Ok(ClassMetrics {
            precision: parse_field(f[1], *line)?,
            recall: parse_field(f[2], *line)?,
            f1: parse_field(f[3], *line)?,
            support: parse_field(f[4], *line)?,
        })
    };
    let n = rows.len();
    let (acc_line, acc) = &rows[n - 3];
    if acc[0] != ACCURACY_ROW || rows[n - 2].1[0] != MACRO_ROW || rows[n - 1].1[0] != WEIGHTED_ROW {
        return Err(Error::InvalidArgument("report csv aggregate rows out of order".into()));
    }
    Ok(Report {
        classes: rows[..n - 3].iter().map(|r| Ok((r.1[0].to_string(), metrics(r)?))).collect::<Result<_>>()?,
        accuracy: parse_field(acc[3], *acc_line)?,
        total: parse_field(acc[4], *acc_line)?,
        macro_avg: metrics(&rows[n - 2])?,
        weighted_avg: metrics(&rows[n - 1])?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two(counts: [[u64; 2]; 2]) -> ConfusionMatrix {
        ConfusionMatrix::from_counts(vec!["a".into(), "b".into()], counts.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn tally_example() {
        let cm = confusion(&[0, 1, 1], &[0, 1, 0], 2).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 0], vec![1, 1]]);
        assert_eq!(confusion(&[], &[], 3).unwrap().total(), 0);
        assert!(confusion(&[0, 2], &[0, 1], 2).is_err());
        assert!(confusion(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let y = [0, 1, 2, 3, 2, 1];
        let cm = confusion(&y, &y, 4).unwrap();
        assert_eq!(cm.trace(), cm.total());
        let agg = aggregate(&cm).unwrap();
        assert_eq!(agg.accuracy, 1.0);
        assert_eq!(agg.macro_avg.f1, 1.0);
        assert_eq!(agg.weighted_avg.precision, 1.0);
    }

    #[test]
    fn hand_computed_metrics() {
        let cm = two_by_two([[2, 1], [0, 3]]);
        let m = per_class_metrics(&cm);
        assert_eq!(m[0].precision, 1.0);
        assert!((m[0].recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((m[0].f1 - 0.8).abs() < 1e-15);
        assert_eq!(m[1].precision, 0.75);
        assert_eq!(m[1].recall, 1.0);
        assert!((m[1].f1 - 6.0 / 7.0).abs() < 1e-15);
        assert!((aggregate(&cm).unwrap().accuracy - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn zero_support_class_is_all_zero() {
        let cm = two_by_two([[3, 0], [0, 0]]);
        let m = per_class_metrics(&cm);
        assert_eq!(m[1], ClassMetrics { precision: 0.0, recall: 0.0, f1: 0.0, support: 0 });
        let agg = aggregate(&cm).unwrap();
        assert_eq!(agg.weighted_avg.precision, m[0].precision);
        assert_eq!(agg.weighted_avg.f1, m[0].f1);
        assert!(aggregate(&two_by_two([[0, 0], [0, 0]])).is_err());
    }

    #[test]
    fn text_rounds_to_two_decimals() {
        let cm = two_by_two([[2, 1], [0, 3]]);
        let text = render_report(&Report::from_confusion(&cm, &["A", "B"]).unwrap(), ReportStyle::Text);
        assert!(text.contains("0.67"));
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().next().unwrap().contains("F1-score"));
    }

    #[test]
    fn csv_roundtrip() {
        let cm = two_by_two([[7, 2], [3, 11]]);
        let r = Report::from_confusion(&cm, &["A", "B"]).unwrap();
        let back = parse_report_csv(&render_report(&r, ReportStyle::Csv)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn confusion_csv_layout() {
        let cm = two_by_two([[1, 2], [3, 4]]);
        assert_eq!(cm.to_csv(), "true\\predicted,a,b\na,1,2\nb,3,4\n");
    }

    #[test]
    fn merge_adds_counts() {
        let mut a = two_by_two([[1, 0], [0, 1]]);
        a.merge(&two_by_two([[0, 2], [1, 0]])).unwrap();
        assert_eq!(a.counts(), &[vec![1, 2], vec![1, 1]]);
    }
}
