//! Wilcoxon signed-rank test for paired samples.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::EvalError;

/// Largest number of non-zero differences handled by exact enumeration
/// under [`PValueMethod::Auto`].
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    /// Exact null distribution over all sign assignments.
    Exact,
    /// Normal approximation without continuity or tie correction.
    Normal,
    /// Exact up to [`EXACT_LIMIT`] differences, normal above.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    pub r_plus: f64,
    pub r_minus: f64,
    /// Two-sided.
    pub p_value: f64,
    pub n_effective: usize,
}

/// Ranks of `values` from 1, averaging ranks over equal values.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            ranks[t] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Tests `a - b` for a zero median. Zero differences are dropped.
pub fn wilcoxon_signed_rank(
    a: &[f64],
    b: &[f64],
    method: PValueMethod,
) -> Result<WilcoxonResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Length(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(EvalError::TooFewPairs(a.len()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|&d| d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Err(EvalError::AllZeroDifferences);
    }
    let ranks = average_ranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let r_plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).fold(0.0, |s, (_, r)| s + r);
    let r_minus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x < 0.0).fold(0.0, |s, (_, r)| s + r);
    let exact = match method {
        PValueMethod::Exact => true,
        PValueMethod::Normal => false,
        PValueMethod::Auto => n <= EXACT_LIMIT,
    };
    let p_value = if exact {
        exact_p(&ranks, r_plus.min(r_minus))
    } else {
        normal_p(n, r_plus.min(r_minus))
    };
    Ok(WilcoxonResult {
        r_plus,
        r_minus,
        p_value,
        n_effective: n,
    })
}

/// `2 * P(T <= t)` under the null, where `T` sums a random sign-subset of
/// `ranks`. Ranks are halves at worst, so doubled ranks are integers.
fn exact_p(ranks: &[f64], t: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut ways = vec![0.0f64; max + 1];
    ways[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            ways[s] += ways[s - r];
        }
    }
    let limit = (t * 2.0).round() as usize;
    let below: f64 = ways[..=limit.min(max)].iter().sum();
    let total = 2f64.powi(ranks.len() as i32);
    (2.0 * below / total).min(1.0)
}

fn normal_p(n: usize, t: f64) -> f64 {
    let n = n as f64;
    let mean = n * (n + 1.0) / 4.0;
    let sd = (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0).sqrt();
    let z = (t - mean) / sd;
    // 2 * Phi(z) for z <= 0
    erfc(-z / std::f64::consts::SQRT_2).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_small_negative() {
        let a: Vec<f64> = (1..=12).map(|i| 0.5 + i as f64 / 100.0).collect();
        let mut b = vec![0.5; 12];
        b[0] = 0.52;
        let exact = wilcoxon_signed_rank(&a, &b, PValueMethod::Exact).unwrap();
        assert_eq!((exact.r_plus, exact.r_minus), (77.0, 1.0));
        assert!((exact.p_value - 2.0 * 2.0 / 4096.0).abs() < 1e-15);
        let normal = wilcoxon_signed_rank(&a, &b, PValueMethod::Normal).unwrap();
        assert!(normal.p_value < 0.01 && normal.p_value > exact.p_value);
    }

    #[test]
    fn ties_and_zeros() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 4.0, 3.0], PValueMethod::Auto)
            .unwrap();
        assert_eq!(r.n_effective, 3);
        assert_eq!(r.r_plus + r.r_minus, 6.0);
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0], PValueMethod::Auto),
            Err(EvalError::AllZeroDifferences)
        ));
        assert!(wilcoxon_signed_rank(&[1.0], &[2.0], PValueMethod::Auto).is_err());
    }

    #[test]
    fn small_exact_distribution() {
        // subsets of {1, 2, 3, 4} with sum <= 4: 7 of 16
        let r = wilcoxon_signed_rank(&[1.0, -2.0, 3.0, -4.0], &[0.0; 4], PValueMethod::Exact).unwrap();
        assert_eq!((r.r_plus, r.r_minus), (4.0, 6.0));
        assert_eq!(r.p_value, 2.0 * 7.0 / 16.0);
    }
}
