//! Adaptive distribution-distance feature selection (ADDFS).
//!
//! Each feature is Min-Max scaled, discretized with ChiMerge, turned into a
//! per-class distribution over the resulting intervals, and scored by the
//! summed pairwise Wasserstein distance between classes. Features are
//! ranked by descending score.

mod chimerge;
mod emd;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::Exec;

pub use chimerge::{chi_square, chimerge, critical_value, IntervalPartition};
pub use emd::{class_distributions, feature_score, wasserstein_1d, ClassDistributionMatrix, SupportMode};

#[derive(Debug, thiserror::Error)]
pub enum AddfsError {
    #[error("no values")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("max_intervals must be at least 1")]
    MaxIntervals,
    #[error("confidence must lie in (0, 1), got {0}")]
    Confidence(f64),
    #[error("label {0} out of range")]
    Label(usize),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("support must be ascending")]
    Support,
    #[error("fraction must lie in (0, 1], got {0}")]
    Fraction(f64),
    #[error("feature {name}: {source}")]
    Feature {
        name: String,
        #[source]
        source: Box<AddfsError>,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AddfsParams {
    pub max_intervals: usize,
    pub confidence: f64,
    pub support: SupportMode,
}

impl Default for AddfsParams {
    fn default() -> Self {
        AddfsParams {
            max_intervals: 15,
            confidence: 0.95,
            support: SupportMode::Midpoint,
        }
    }
}

impl AddfsParams {
    pub fn validate(&self) -> Result<(), AddfsError> {
        if self.max_intervals == 0 {
            return Err(AddfsError::MaxIntervals);
        }
        critical_value(self.confidence, 1).map(|_| ())
    }
}

/// Maps `column` to `(x - min) / (max - min)`; a constant column becomes
/// all zeros.
pub fn min_max_scale_column(column: &[f64]) -> Vec<f64> {
    let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0.0; column.len()];
    }
    column.iter().map(|&x| (x - lo) / span).collect()
}

/// Min-Max scales every feature column.
pub fn min_max_scale(data: &LabeledDataset) -> LabeledDataset {
    let mut out = data.clone();
    for j in 0..data.n_features() {
        out.set_column(j, &min_max_scale_column(&data.column(j)));
    }
    out
}

/// Scores of every feature and their order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    /// Feature indices by descending score, ascending index on ties.
    pub order: Vec<usize>,
}

impl FeatureRanking {
    /// Orders `scores` descending, ties by ascending index.
    pub fn from_scores(feature_names: Vec<String>, scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        FeatureRanking {
            feature_names,
            scores,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `rank,feature_name,emd_score`, ranks from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AddfsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "feature_name", "emd_score"])?;
        for (r, &j) in self.order.iter().enumerate() {
            w.write_record([
                (r + 1).to_string(),
                self.feature_names[j].clone(),
                self.scores[j].to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Number of features kept for `fraction` of `n`: `ceil(fraction * n)`,
/// at least one.
pub fn select_count(n: usize, fraction: f64) -> Result<usize, AddfsError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(AddfsError::Fraction(fraction));
    }
    let k = (fraction * n as f64 - 1e-9).ceil() as usize;
    Ok(k.clamp(1.min(n), n))
}

/// The first `ceil(fraction * n)` indices of the ranking.
pub fn select_top(ranking: &FeatureRanking, fraction: f64) -> Result<Vec<usize>, AddfsError> {
    let k = select_count(ranking.len(), fraction)?;
    Ok(ranking.order[..k].to_vec())
}

/// ADDFS score of one raw feature column. Only classes present in `labels`
/// take part.
pub fn score_column(
    column: &[f64],
    labels: &[usize],
    n_classes: usize,
    params: &AddfsParams,
) -> Result<f64, AddfsError> {
    let mut remap = vec![usize::MAX; n_classes];
    let mut present = 0;
    for &l in labels {
        if l >= n_classes {
            return Err(AddfsError::Label(l));
        }
        if remap[l] == usize::MAX {
            remap[l] = present;
            present += 1;
        }
    }
    let labels: Vec<usize> = labels.iter().map(|&l| remap[l]).collect();
    let values = min_max_scale_column(column);
    let part = chimerge(&values, &labels, present, params.max_intervals, params.confidence)?;
    let dist = class_distributions(&values, &labels, present, &part, params.support)?;
    feature_score(&dist)
}

/// Scores and ranks every feature of `data`.
pub fn rank_features(
    data: &LabeledDataset,
    params: &AddfsParams,
    exec: Exec,
) -> Result<FeatureRanking, AddfsError> {
    params.validate()?;
    let scores = exec.try_map_range(data.n_features(), |j| {
        score_column(&data.column(j), data.labels(), data.n_classes(), params).map_err(|e| {
            AddfsError::Feature {
                name: data.feature_names()[j].clone(),
                source: Box::new(e),
            }
        })
    })?;
    Ok(FeatureRanking::from_scores(data.feature_names().to_vec(), scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand() -> LabeledDataset {
        let sep = [0.0, 0.1, 0.2, 0.8, 0.9, 1.0];
        let noise = [0.5, 0.1, 0.9, 0.4, 0.8, 0.2];
        let rows = (0..6).map(|i| vec![noise[i], sep[i], sep[i]]).collect();
        let labels = ["A", "A", "A", "B", "B", "B"].map(String::from).to_vec();
        LabeledDataset::new(vec!["noise".into(), "sep".into(), "dup".into()], rows, labels).unwrap()
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(min_max_scale_column(&[2.0, 4.0, 6.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(min_max_scale_column(&[7.0; 3]), vec![0.0; 3]);
        assert_eq!(min_max_scale_column(&[0.0, 0.25, 1.0]), vec![0.0, 0.25, 1.0]);
        let d = min_max_scale(&hand());
        assert_eq!(d.column(0)[1], 0.0);
        assert_eq!(d.column(0)[2], 1.0);
    }

    #[test]
    fn separating_feature_first_and_duplicates_adjacent() {
        let r = rank_features(&hand(), &AddfsParams::default(), Exec::Sequential).unwrap();
        assert_eq!(r.order, vec![1, 2, 0]);
        assert_eq!(r.scores[1], r.scores[2]);
        assert_eq!(r.scores[0], 0.0);
        assert_eq!(r.scores[1], 0.5);
        let par = rank_features(&hand(), &AddfsParams::default(), Exec::Parallel).unwrap();
        assert_eq!(r, par);
    }

    #[test]
    fn selection_counts() {
        assert_eq!(select_count(89, 0.1).unwrap(), 9);
        assert_eq!(select_count(10, 0.5).unwrap(), 5);
        assert_eq!(select_count(10, 0.3).unwrap(), 3);
        assert_eq!(select_count(10, 1.0).unwrap(), 10);
        assert_eq!(select_count(10, 0.01).unwrap(), 1);
        assert!(select_count(10, 0.0).is_err());
        assert!(select_count(10, 1.1).is_err());
        let counts: Vec<usize> = (1..10).map(|i| select_count(89, i as f64 / 10.0).unwrap()).collect();
        assert_eq!(counts, vec![9, 18, 27, 36, 45, 54, 63, 72, 81]);
    }

    #[test]
    fn ranking_csv() {
        let r = FeatureRanking::from_scores(vec!["a".into(), "b".into()], vec![0.25, 1.0]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "rank,feature_name,emd_score\n1,b,1\n2,a,0.25\n");
    }
}
