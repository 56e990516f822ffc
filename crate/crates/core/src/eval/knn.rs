//! k-nearest-neighbour classifier with Euclidean distance.

use crate::dataset::LabeledDataset;

use super::{EvalError, Model};

#[derive(Debug, Clone)]
pub struct Knn {
    train: LabeledDataset,
    k: usize,
}

impl Knn {
    pub fn fit(train: &LabeledDataset, k: usize) -> Result<Self, EvalError> {
        if train.n_samples() == 0 {
            return Err(EvalError::EmptyTraining);
        }
        if k == 0 {
            return Err(EvalError::Neighbours(k));
        }
        Ok(Knn {
            train: train.clone(),
            k,
        })
    }

    /// Indices of the `k` nearest training rows, nearest first, lower index
    /// first among equal distances.
    pub fn neighbours(&self, query: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, r)| {
                let s: f64 = r.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                (s, i)
            })
            .collect();
        let k = self.k.min(d.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, cmp);
            d.truncate(k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }
}

impl Model for Knn {
    /// Majority class of the neighbours; a tied vote goes to the tied class
    /// whose member is nearest. `k` above the training size uses every row.
    fn predict(&self, row: &[f64]) -> usize {
        let near = self.neighbours(row);
        let labels = self.train.labels();
        let mut votes = vec![0usize; self.train.n_classes()];
        for &i in &near {
            votes[labels[i]] += 1;
        }
        let top = votes.iter().copied().max().unwrap_or(0);
        near.iter()
            .map(|&i| labels[i])
            .find(|&c| votes[c] == top)
            .unwrap_or(0)
    }
}
