//! Confusion matrix and per-class precision / recall / F1.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{format_sig17, Scalar};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>, class_names: Vec<String>) -> Result<Self> {
        let k = counts.len();
        if k == 0 {
            return Err(Error::Input("confusion matrix has no classes".into()));
        }
        if counts.iter().any(|r| r.len() != k) {
            return Err(Error::Input("confusion matrix must be square".into()));
        }
        if class_names.len() != k {
            return Err(Error::Dimension { expected: k, got: class_names.len() });
        }
        Ok(Self { counts, class_names })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn column_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|k| self.counts[k][k]).sum()
    }
}

/// Default class names `class_0 .. class_{k-1}`.
pub fn numbered_classes(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("class_{i}")).collect()
}

/// Counts `(true, predicted)` pairs.
pub fn confusion_matrix(
    true_labels: &[usize],
    predicted_labels: &[usize],
    class_names: Vec<String>,
) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted_labels.len() {
        return Err(Error::Input(format!(
            "{} true labels vs {} predictions",
            true_labels.len(),
            predicted_labels.len()
        )));
    }
    let k = class_names.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        if t >= k || p >= k {
            return Err(Error::Input(format!("label pair ({t}, {p}) outside [0, {k})")));
        }
        counts[t][p] += 1;
    }
    ConfusionMatrix::from_counts(counts, class_names)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScore<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    /// Some ratio was 0/0 and was reported as 0.
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics<T> {
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassScore<T>>,
    pub accuracy: T,
}

fn ratio<T: Scalar>(num: u64, den: u64) -> (T, bool) {
    if den == 0 {
        (T::zero(), true)
    } else {
        (T::lit(num as f64) / T::lit(den as f64), false)
    }
}

/// `2PR / (P + R)`, 0 when both are 0.
pub fn f1_score<T: Scalar>(precision: T, recall: T) -> T {
    let s = precision + recall;
    if s == T::zero() {
        T::zero()
    } else {
        T::lit(2.0) * precision * recall / s
    }
}

pub fn class_metrics<T: Scalar>(cm: &ConfusionMatrix) -> Result<ClassMetrics<T>> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Input("confusion matrix is empty".into()));
    }
    let per_class = (0..cm.num_classes())
        .map(|k| {
            let tp = cm.counts[k][k];
            let (precision, p_undef) = ratio::<T>(tp, cm.column_sum(k));
            let (recall, r_undef) = ratio::<T>(tp, cm.row_sum(k));
            let f1 = f1_score(precision, recall);
            ClassScore { precision, recall, f1, undefined: p_undef || r_undef }
        })
        .collect();
    Ok(ClassMetrics {
        class_names: cm.class_names.clone(),
        per_class,
        accuracy: T::lit(cm.trace() as f64) / T::lit(total as f64),
    })
}

impl<T: Scalar> ClassMetrics<T> {
    /// `class,precision,recall,f1` rows at full precision, then `accuracy,<value>`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "class,precision,recall,f1")?;
        for (name, s) in self.class_names.iter().zip(&self.per_class) {
            writeln!(
                w,
                "{name},{},{},{}",
                format_sig17(s.precision.to_f64_lossy()),
                format_sig17(s.recall.to_f64_lossy()),
                format_sig17(s.f1.to_f64_lossy())
            )?;
        }
        writeln!(w, "accuracy,{}", format_sig17(self.accuracy.to_f64_lossy()))?;
        Ok(())
    }

    /// Two-decimal table with accuracy as a whole percentage.
    pub fn render_table(&self, title: &str) -> String {
        let width = self.class_names.iter().map(|n| n.len()).max().unwrap_or(0).max(7);
        let mut out = String::new();
        let _ = writeln!(out, "Evaluation Metrics of {title}");
        let _ =
            writeln!(out, "{:<width$}  {:>9}  {:>6}  {:>8}", "Classes", "Precision", "Recall", "F1-score");
        for (name, s) in self.class_names.iter().zip(&self.per_class) {
            let flag = if s.undefined { "  (0/0 -> 0)" } else { "" };
            let _ = writeln!(
                out,
                "{name:<width$}  {:>9.2}  {:>6.2}  {:>8.2}{flag}",
                s.precision.to_f64_lossy(),
                s.recall.to_f64_lossy(),
                s.f1.to_f64_lossy()
            );
        }
        let _ = writeln!(out, "Accuracy of {title}: {:.0}", self.accuracy.to_f64_lossy() * 100.0);
        out
    }
}
