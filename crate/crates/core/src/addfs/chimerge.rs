//! Bottom-up chi-square discretization.

use super::AddfsError;

/// Upper quantiles of the chi-square distribution, rows are df 1..=30.
const CRITICAL_90: [f64; 30] = [
    2.705543, 4.60517, 6.251389, 7.77944, 9.236357, 10.644641, 12.017037, 13.361566, 14.683657,
    15.987179, 17.275009, 18.549348, 19.811929, 21.064144, 22.30713, 23.541829, 24.769035,
    25.989423, 27.203571, 28.411981, 29.615089, 30.813282, 32.0069, 33.196244, 34.381587,
    35.563171, 36.741217, 37.915923, 39.08747, 40.256024,
];
const CRITICAL_95: [f64; 30] = [
    3.841459, 5.991465, 7.814728, 9.487729, 11.070498, 12.591587, 14.06714, 15.507313, 16.918978,
    18.307038, 19.675138, 21.02607, 22.362032, 23.684791, 24.99579, 26.296228, 27.587112,
    28.869299, 30.143527, 31.410433, 32.670573, 33.924438, 35.172462, 36.415029, 37.652484,
    38.885139, 40.113272, 41.337138, 42.556968, 43.772972,
];
const CRITICAL_99: [f64; 30] = [
    6.634897, 9.21034, 11.344867, 13.276704, 15.086272, 16.811894, 18.475307, 20.090235,
    21.665994, 23.209251, 24.72497, 26.216967, 27.68825, 29.141238, 30.577914, 31.999927,
    33.408664, 34.805306, 36.190869, 37.566235, 38.932173, 40.28936, 41.638398, 42.97982,
    44.314105, 45.641683, 46.962942, 48.278236, 49.587884, 50.892181,
];

/// Chi-square critical value at `confidence` with `df` degrees of freedom.
///
/// Confidence levels 0.90, 0.95 and 0.99 with `df <= 30` come from a fixed
/// table; anything else falls back to the inverse CDF.
pub fn critical_value(confidence: f64, df: usize) -> Result<f64, AddfsError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(AddfsError::Confidence(confidence));
    }
    let df = df.max(1);
    let table = [(0.90, &CRITICAL_90), (0.95, &CRITICAL_95), (0.99, &CRITICAL_99)];
    if df <= 30 {
        if let Some((_, t)) = table.iter().find(|(c, _)| (c - confidence).abs() < 1e-12) {
            return Ok(t[df - 1]);
        }
    }
    use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};
    let dist = ChiSquared::new(df as f64).map_err(|_| AddfsError::Confidence(confidence))?;
    // the library inverse is a coarse bisection; polish it with Newton steps
    let mut x = dist.inverse_cdf(confidence);
    for _ in 0..50 {
        let step = (dist.cdf(x) - confidence) / dist.pdf(x);
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= 1e-14 * x.abs() {
            break;
        }
    }
    Ok(x)
}

/// Chi-square statistic of two adjacent intervals given their per-class
/// counts. Cells with zero expected frequency contribute nothing.
pub fn chi_square(a: &[u64], b: &[u64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let ra: u64 = a.iter().sum();
    let rb: u64 = b.iter().sum();
    let n = (ra + rb) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mut chi = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        for (obs, row) in [(x, ra), (y, rb)] {
            let e = row as f64 * col / n;
            if e > 0.0 {
                let d = obs as f64 - e;
                chi += d * d / e;
            }
        }
    }
    chi
}

/// Consecutive intervals over one feature: interval `i` is
/// `[cut_points[i - 1], cut_points[i])`, the first is unbounded below and
/// the last unbounded above.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPartition {
    pub cut_points: Vec<f64>,
}

impl IntervalPartition {
    pub fn k(&self) -> usize {
        self.cut_points.len() + 1
    }

    /// Interval holding `x`; a value equal to a cut point falls to the
    /// upper interval.
    pub fn interval_of(&self, x: f64) -> usize {
        self.cut_points.partition_point(|&c| c <= x)
    }

    /// Per-class sample counts of every interval, `k x n_classes`.
    pub fn counts(&self, values: &[f64], labels: &[usize], n_classes: usize) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0u64; n_classes]; self.k()];
        for (&v, &l) in values.iter().zip(labels) {
            out[self.interval_of(v)][l] += 1;
        }
        out
    }
}

struct Interval {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
}

/// Merges adjacent intervals with the smallest chi-square (lowest index on
/// ties) while there are more than `max_intervals`, then while the
/// smallest chi-square is below the critical value for `n_classes - 1`
/// degrees of freedom.
pub fn chimerge(
    values: &[f64],
    labels: &[usize],
    n_classes: usize,
    max_intervals: usize,
    confidence: f64,
) -> Result<IntervalPartition, AddfsError> {
    if values.is_empty() {
        return Err(AddfsError::Empty);
    }
    if values.len() != labels.len() {
        return Err(AddfsError::Length(values.len(), labels.len()));
    }
    if max_intervals == 0 {
        return Err(AddfsError::MaxIntervals);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(AddfsError::Label(bad));
    }
    let threshold = critical_value(confidence, n_classes.saturating_sub(1))?;

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ivs: Vec<Interval> = Vec::new();
    for i in order {
        let v = values[i];
        match ivs.last_mut() {
            Some(last) if last.hi == v => last.counts[labels[i]] += 1,
            _ => {
                let mut counts = vec![0; n_classes];
                counts[labels[i]] = 1;
                ivs.push(Interval { lo: v, hi: v, counts });
            }
        }
    }
    let mut chi: Vec<f64> = ivs
        .windows(2)
        .map(|w| chi_square(&w[0].counts, &w[1].counts))
        .collect();

    while ivs.len() > 1 {
        let (i, min) = chi
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, c)| if c < best.1 { (i, c) } else { best });
        if ivs.len() <= max_intervals && min >= threshold {
            break;
        }
        let right = ivs.remove(i + 1);
        let left = &mut ivs[i];
        left.hi = right.hi;
        for (a, b) in left.counts.iter_mut().zip(right.counts) {
            *a += b;
        }
        chi.remove(i);
        if i > 0 {
            chi[i - 1] = chi_square(&ivs[i - 1].counts, &ivs[i].counts);
        }
        if i < chi.len() {
            chi[i] = chi_square(&ivs[i].counts, &ivs[i + 1].counts);
        }
    }

    let cut_points = ivs
        .windows(2)
        .map(|w| {
            let mid = w[0].hi + (w[1].lo - w[0].hi) / 2.0;
            if mid > w[0].hi {
                mid
            } else {
                w[1].lo
            }
        })
        .collect();
    Ok(IntervalPartition { cut_points })
}
