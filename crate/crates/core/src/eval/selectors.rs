//! Feature rankers: ADDFS and the Relief, Pearson and F-score baselines.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::addfs::{min_max_scale, rank_features, AddfsParams, FeatureRanking};
use crate::dataset::LabeledDataset;
use crate::stats::mean;
use crate::Exec;

use super::EvalError;

/// Anything that ranks the features of a training set.
pub trait FeatureSelector: Sync {
    fn name(&self) -> String;
    fn rank(&self, train: &LabeledDataset, seed: u64, exec: Exec) -> Result<FeatureRanking, EvalError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectorKind {
    Addfs,
    Relief,
    Pearson,
    Fscore,
    None,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 5] = [
        SelectorKind::Addfs,
        SelectorKind::Relief,
        SelectorKind::Pearson,
        SelectorKind::Fscore,
        SelectorKind::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectorKind::Addfs => "addfs",
            SelectorKind::Relief => "relief",
            SelectorKind::Pearson => "pearson",
            SelectorKind::Fscore => "fscore",
            SelectorKind::None => "none",
        }
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SelectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SelectorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown selector {s:?} (expected addfs, relief, pearson, fscore or none)"))
    }
}

/// A built-in selector with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selector {
    pub kind: SelectorKind,
    pub addfs: AddfsParams,
}

impl Selector {
    pub fn new(kind: SelectorKind) -> Self {
        Selector {
            kind,
            addfs: AddfsParams::default(),
        }
    }

    pub fn addfs(params: AddfsParams) -> Self {
        Selector {
            kind: SelectorKind::Addfs,
            addfs: params,
        }
    }
}

impl FeatureSelector for Selector {
    fn name(&self) -> String {
        self.kind.to_string()
    }

    fn rank(&self, train: &LabeledDataset, seed: u64, exec: Exec) -> Result<FeatureRanking, EvalError> {
        let names = train.feature_names().to_vec();
        let scores = match self.kind {
            SelectorKind::Addfs => return Ok(rank_features(train, &self.addfs, exec)?),
            SelectorKind::Relief => relief_scores(train, train.n_samples(), seed),
            SelectorKind::Pearson => exec.map_range(train.n_features(), |j| pearson_score(train, j)),
            SelectorKind::Fscore => exec.map_range(train.n_features(), |j| f_score(train, j)),
            SelectorKind::None => vec![0.0; train.n_features()],
        };
        Ok(FeatureRanking::from_scores(names, scores))
    }
}

/// Classic Relief weights over `iterations` seeded draws, on Min-Max
/// scaled features. The nearest miss is the nearest row of any other
/// class; draws without a hit or a miss leave the weights unchanged.
pub fn relief_scores(data: &LabeledDataset, iterations: usize, seed: u64) -> Vec<f64> {
    let scaled = min_max_scale(data);
    let m = scaled.n_samples();
    let labels = scaled.labels();
    let mut w = vec![0.0; scaled.n_features()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };
    for _ in 0..iterations {
        let i = rng.gen_range(0..m);
        let xi = scaled.row(i);
        let (mut hit, mut miss): (Option<(f64, usize)>, Option<(f64, usize)>) = (None, None);
        for j in (0..m).filter(|&j| j != i) {
            let d = dist(xi, scaled.row(j));
            let slot = if labels[j] == labels[i] { &mut hit } else { &mut miss };
            if slot.map_or(true, |(best, _)| d < best) {
                *slot = Some((d, j));
            }
        }
        let (Some((_, h)), Some((_, s))) = (hit, miss) else { continue };
        let (xh, xs) = (scaled.row(h), scaled.row(s));
        for (f, wf) in w.iter_mut().enumerate() {
            *wf += ((xi[f] - xs[f]).abs() - (xi[f] - xh[f]).abs()) / iterations as f64;
        }
    }
    w
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Largest `|r|` between column `j` and a one-vs-rest class indicator.
pub fn pearson_score(data: &LabeledDataset, j: usize) -> f64 {
    let x = data.column(j);
    (0..data.n_classes())
        .map(|c| {
            let y: Vec<f64> = data.labels().iter().map(|&l| f64::from(u8::from(l == c))).collect();
            pearson(&x, &y).abs()
        })
        .fold(0.0, f64::max)
}

/// One-way ANOVA F statistic of column `j` across the classes present.
/// A constant column scores 0; zero within-class spread with distinct
/// class means scores `f64::MAX`.
pub fn f_score(data: &LabeledDataset, j: usize) -> f64 {
    let x = data.column(j);
    let labels = data.labels();
    let mut sums = vec![0.0; data.n_classes()];
    let mut counts = vec![0usize; data.n_classes()];
    for (&v, &l) in x.iter().zip(labels) {
        sums[l] += v;
        counts[l] += 1;
    }
    let grand = mean(&x);
    let present = counts.iter().filter(|&&c| c > 0).count();
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let between: f64 = means
        .iter()
        .zip(&counts)
        .map(|(m, &c)| c as f64 * (m - grand) * (m - grand))
        .sum();
    let within: f64 = x.iter().zip(labels).map(|(v, &l)| (v - means[l]) * (v - means[l])).sum();
    let m = x.len();
    if present < 2 || between <= 0.0 {
        return 0.0;
    }
    if within <= 0.0 || m <= present {
        return f64::MAX;
    }
    (between / (present - 1) as f64) / (within / (m - present) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand() -> LabeledDataset {
        let sep = [0.0, 0.1, 0.2, 0.8, 0.9, 1.0];
        let noise = [0.5, 0.1, 0.9, 0.4, 0.8, 0.2];
        let rows = (0..6).map(|i| vec![noise[i], 3.0, sep[i]]).collect();
        let labels = ["A", "A", "A", "B", "B", "B"].map(String::from).to_vec();
        LabeledDataset::new(vec!["noise".into(), "const".into(), "sep".into()], rows, labels).unwrap()
    }

    #[test]
    fn separating_feature_first_everywhere() {
        for kind in [SelectorKind::Addfs, SelectorKind::Relief, SelectorKind::Pearson, SelectorKind::Fscore] {
            let r = Selector::new(kind).rank(&hand(), 3, Exec::Sequential).unwrap();
            assert_eq!(r.order[0], 2, "{kind}");
        }
    }

    #[test]
    fn constant_column_scores_zero() {
        let d = hand();
        assert_eq!(pearson_score(&d, 1), 0.0);
        assert_eq!(f_score(&d, 1), 0.0);
        assert_eq!(relief_scores(&d, 6, 1)[1], 0.0);
    }

    #[test]
    fn f_score_by_hand() {
        // class means 0.1 and 0.9, grand 0.5: between 6 * 0.16 = 0.96,
        // within 4 * 0.01 = 0.04, F = 0.96 / (0.04 / 4) = 96
        assert!((f_score(&hand(), 2) - 96.0).abs() < 1e-9);
        let r = pearson_score(&hand(), 2);
        assert!(r > 0.97 && r <= 1.0);
    }

    #[test]
    fn none_keeps_column_order() {
        let r = Selector::new(SelectorKind::None).rank(&hand(), 0, Exec::Sequential).unwrap();
        assert_eq!(r.order, vec![0, 1, 2]);
        assert_eq!("fscore".parse::<SelectorKind>().unwrap(), SelectorKind::Fscore);
        assert!("mrmr".parse::<SelectorKind>().is_err());
    }
}
