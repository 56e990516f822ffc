//! Cross-validated evaluation of feature subsets: classifiers, metrics,
//! selection sweeps, the peak-feature ablation, peak-parameter sweeps,
//! selector comparisons and the Wilcoxon signed-rank test.

mod folds;
mod knn;
mod metrics;
mod selectors;
mod sweep;
mod tree;
mod wilcoxon;

use serde::{Deserialize, Serialize};

use crate::addfs::AddfsError;
use crate::dataset::{DatasetError, LabeledDataset};
use crate::features::FeatureError;

pub use folds::{stratified_kfold, Fold};
pub use knn::Knn;
pub use metrics::ConfusionMatrix;
pub use selectors::{
    f_score, pearson_score, relief_scores, FeatureSelector, Selector, SelectorKind,
};
pub use sweep::{
    ablation_peak_features, compare, cross_validate, param_sweep, run_sweep, AblationReport,
    Comparison, EvalConfig, EvalReport, FoldScore, ParamPoint, WilcoxonRow,
};
pub use tree::DecisionTree;
pub use wilcoxon::{average_ranks, wilcoxon_signed_rank, PValueMethod, WilcoxonResult, EXACT_LIMIT};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty training set")]
    EmptyTraining,
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("need at least 2 folds, got {0}")]
    Folds(usize),
    #[error("k must be at least 1, got {0}")]
    Neighbours(usize),
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("missing canonical feature column {0:?}")]
    MissingColumn(String),
    #[error("no fractions requested")]
    NoFractions,
    #[error(transparent)]
    Addfs(#[from] AddfsError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<EvalError>,
    },
}

impl EvalError {
    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        EvalError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

/// A fitted classifier.
pub trait Model: Send + Sync {
    fn predict(&self, row: &[f64]) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    #[default]
    Dt,
    Knn,
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dt" => Ok(ClassifierKind::Dt),
            "knn" => Ok(ClassifierKind::Knn),
            _ => Err(format!("unknown classifier {s:?} (expected dt or knn)")),
        }
    }
}

/// Classifier choice; `k` only matters for kNN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub k: usize,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            kind: ClassifierKind::Dt,
            k: 10,
        }
    }
}

impl ClassifierSpec {
    pub fn fit(&self, train: &LabeledDataset) -> Result<Box<dyn Model>, EvalError> {
        Ok(match self.kind {
            ClassifierKind::Dt => Box::new(DecisionTree::fit(train)?),
            ClassifierKind::Knn => Box::new(Knn::fit(train, self.k)?),
        })
    }
}
