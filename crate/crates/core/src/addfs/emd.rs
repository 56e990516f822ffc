//! Class distribution matrices and the one-dimensional Wasserstein distance.

use serde::{Deserialize, Serialize};

use super::chimerge::IntervalPartition;
use super::AddfsError;

const NORM_TOL: f64 = 1e-9;

/// Support positions are snapped to multiples of this step, which keeps
/// scores bit-stable under positive affine rescaling of the raw feature.
const SUPPORT_GRID: f64 = 1.0 / (1u64 << 20) as f64;

/// Ground positions of the intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportMode {
    /// Interval midpoints in feature space.
    #[default]
    Midpoint,
    /// Interval index `0, 1, .., k - 1`.
    Index,
}

impl std::str::FromStr for SupportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "midpoint" => Ok(SupportMode::Midpoint),
            "index" => Ok(SupportMode::Index),
            _ => Err(format!("unknown support mode {s:?} (expected midpoint or index)")),
        }
    }
}

/// Per-class relative frequencies over the intervals of one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistributionMatrix {
    /// `C x k`, each row sums to 1.
    pub p: Vec<Vec<f64>>,
    /// `k` ascending positions.
    pub support: Vec<f64>,
}

fn snap(x: f64) -> f64 {
    (x / SUPPORT_GRID).round() * SUPPORT_GRID
}

pub fn class_distributions(
    values: &[f64],
    labels: &[usize],
    n_classes: usize,
    partition: &IntervalPartition,
    mode: SupportMode,
) -> Result<ClassDistributionMatrix, AddfsError> {
    if values.is_empty() {
        return Err(AddfsError::Empty);
    }
    if values.len() != labels.len() {
        return Err(AddfsError::Length(values.len(), labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(AddfsError::Label(bad));
    }
    let k = partition.k();
    let counts = partition.counts(values, labels, n_classes);
    let mut totals = vec![0u64; n_classes];
    for &l in labels {
        totals[l] += 1;
    }
    if let Some(c) = totals.iter().position(|&t| t == 0) {
        return Err(AddfsError::EmptyClass(c));
    }
    let p = (0..n_classes)
        .map(|c| (0..k).map(|g| counts[g][c] as f64 / totals[c] as f64).collect())
        .collect();
    let support = match mode {
        SupportMode::Index => (0..k).map(|g| g as f64).collect(),
        SupportMode::Midpoint => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut bounds = Vec::with_capacity(k + 1);
            bounds.push(lo);
            bounds.extend_from_slice(&partition.cut_points);
            bounds.push(hi);
            bounds.windows(2).map(|w| snap(w[0] + (w[1] - w[0]) / 2.0)).collect()
        }
    };
    Ok(ClassDistributionMatrix { p, support })
}

/// Optimal transport cost between `p` and `q` on `support` with ground
/// metric `|x - y|`, via the CDF difference.
pub fn wasserstein_1d(p: &[f64], q: &[f64], support: &[f64]) -> Result<f64, AddfsError> {
    let k = support.len();
    if p.len() != k || q.len() != k {
        return Err(AddfsError::Length(p.len().max(q.len()), k));
    }
    if k == 0 {
        return Err(AddfsError::Empty);
    }
    for dist in [p, q] {
        let s: f64 = dist.iter().sum();
        if (s - 1.0).abs() > NORM_TOL || dist.iter().any(|&x| !(x >= 0.0)) {
            return Err(AddfsError::NotNormalized(s));
        }
    }
    if support.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(AddfsError::Support);
    }
    let (mut cp, mut cq, mut total) = (0.0, 0.0, 0.0);
    for i in 0..k - 1 {
        cp += p[i];
        cq += q[i];
        total += (cp - cq).abs() * (support[i + 1] - support[i]);
    }
    Ok(total)
}

/// Sum of pairwise Wasserstein distances over unordered class pairs.
pub fn feature_score(m: &ClassDistributionMatrix) -> Result<f64, AddfsError> {
    let mut score = 0.0;
    for a in 0..m.p.len() {
        for b in a + 1..m.p.len() {
            score += wasserstein_1d(&m.p[a], &m.p[b], &m.support)?;
        }
    }
    Ok(score)
}
