//! Slow, direct reference implementations checked against the library in
//! tests. Nothing here shares code with `vtid-core`; inputs are plain
//! numbers so the two sides cannot drift together.

pub mod peaks;
pub mod transport;

/// Chi-square of a `2 x C` contingency table from the expected-count matrix,
/// skipping cells whose expectation is zero.
pub fn chi_square(table: [&[u64]; 2]) -> f64 {
    let c = table[0].len();
    let n: f64 = table.iter().flat_map(|r| r.iter()).map(|&x| x as f64).sum();
    if n == 0.0 {
        return 0.0;
    }
    let row_total = |r: usize| table[r].iter().map(|&x| x as f64).sum::<f64>();
    let col_total = |j: usize| (table[0][j] + table[1][j]) as f64;
    let mut expected = [vec![0.0; c], vec![0.0; c]];
    for (r, row) in expected.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = row_total(r) / n * col_total(j);
        }
    }
    let mut chi = 0.0;
    for r in 0..2 {
        for j in 0..c {
            let e = expected[r][j];
            if e != 0.0 {
                chi += (table[r][j] as f64 - e).powi(2) / e;
            }
        }
    }
    chi
}

/// Two-sided signed-rank p-value by enumerating every sign assignment of
/// `ranks`; `t` is the smaller observed rank sum.
pub fn signed_rank_p_enumerated(ranks: &[f64], t: f64) -> f64 {
    let n = ranks.len();
    assert!(n <= 24, "enumeration is exponential");
    let mut at_or_below = 0u64;
    for mask in 0u64..(1 << n) {
        let plus: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if plus <= t + 1e-9 {
            at_or_below += 1;
        }
    }
    (2.0 * at_or_below as f64 / (1u64 << n) as f64).min(1.0)
}

/// Accuracy and macro F1 of a confusion matrix (rows true, columns
/// predicted) written out term by term.
pub fn accuracy_and_macro_f1(cm: &[Vec<u64>]) -> (f64, f64) {
    let c = cm.len();
    let total: u64 = cm.iter().flatten().sum();
    let correct: u64 = (0..c).map(|i| cm[i][i]).sum();
    let mut f1_sum = 0.0;
    for k in 0..c {
        let tp = cm[k][k] as f64;
        let fp: f64 = (0..c).filter(|&t| t != k).map(|t| cm[t][k] as f64).sum();
        let fn_: f64 = (0..c).filter(|&p| p != k).map(|p| cm[k][p] as f64).sum();
        let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
        let recall = if tp + fn_ == 0.0 { 0.0 } else { tp / (tp + fn_) };
        f1_sum += if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
    }
    (correct as f64 / total as f64, f1_sum / c as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn references_agree_with_hand_values() {
        assert_eq!(chi_square([&[5, 0], &[0, 5]]), 10.0);
        let ranks: Vec<f64> = (1..=12).map(f64::from).collect();
        assert_eq!(signed_rank_p_enumerated(&ranks, 1.0), 4.0 / 4096.0);
        let (acc, f1) = accuracy_and_macro_f1(&[vec![35, 5], vec![10, 50]]);
        assert_eq!(acc, 0.85);
        assert!(f1 > 0.0 && f1 < 1.0);
    }
}
