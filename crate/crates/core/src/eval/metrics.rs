//! Confusion matrices, accuracy and F1.

use super::EvalError;

/// `C x C` counts, rows are the true class and columns the prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let n = rows.len();
        let mut cm = ConfusionMatrix::new(n);
        for (t, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "confusion matrix must be square");
            for (p, &c) in r.iter().enumerate() {
                cm.counts[t * n + p] = c;
            }
        }
        cm
    }

    /// Binary matrix with class 1 as the positive class.
    pub fn binary(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix::from_rows(&[vec![tn, fp], vec![fn_, tp]])
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n_classes + predicted] += 1;
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.n_classes, other.n_classes);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    fn nonempty(&self) -> Result<u64, EvalError> {
        match self.total() {
            0 => Err(EvalError::EmptyConfusion),
            t => Ok(t),
        }
    }

    /// Correct predictions over all predictions.
    pub fn accuracy(&self) -> Result<f64, EvalError> {
        let total = self.nonempty()?;
        let diag: u64 = (0..self.n_classes).map(|c| self.get(c, c)).sum();
        Ok(diag as f64 / total as f64)
    }

    /// Precision, recall and F1 of class `c`, with 0/0 taken as 0.
    pub fn class_scores(&self, c: usize) -> (f64, f64, f64) {
        let tp = self.get(c, c) as f64;
        let predicted: u64 = (0..self.n_classes).map(|t| self.get(t, c)).sum();
        let actual: u64 = (0..self.n_classes).map(|p| self.get(c, p)).sum();
        let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let precision = div(tp, predicted as f64);
        let recall = div(tp, actual as f64);
        (precision, recall, div(2.0 * precision * recall, precision + recall))
    }

    /// Unweighted mean of the per-class F1 scores.
    pub fn f1_macro(&self) -> Result<f64, EvalError> {
        self.nonempty()?;
        let sum: f64 = (0..self.n_classes).map(|c| self.class_scores(c).2).sum();
        Ok(sum / self.n_classes as f64)
    }

    /// F1 of class 1 for a binary matrix.
    pub fn f1_positive(&self) -> Option<f64> {
        (self.n_classes == 2 && self.total() > 0).then(|| self.class_scores(1).2)
    }
}
