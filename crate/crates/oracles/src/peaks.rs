//! Peak-point features recomputed from their definitions.

/// One packet reduced to what the peak features look at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pkt {
    /// Seconds since the first packet of the flow.
    pub t: f64,
    pub payload: u32,
    /// Payload plus headers.
    pub wire: u64,
}

const SLOT_EPS: f64 = 1e-9;

/// Positions `i` with `x[i-1] <= x[i] >= x[i+1]`.
pub fn peak_positions(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if x[i] >= x[i - 1] && x[i] >= x[i + 1] {
            out.push(i);
        }
    }
    out
}

/// Whether `t` lies in `[k * w, (k + 1) * w)` up to the boundary tolerance.
fn in_slot(t: f64, k: usize, w: f64) -> bool {
    let e = SLOT_EPS * t.abs().max(1.0);
    t + e >= k as f64 * w && t + e < (k + 1) as f64 * w
}

/// Population mean, standard deviation, minimum and maximum; zeros when
/// empty.
pub fn summary(x: &[f64]) -> [f64; 4] {
    if x.is_empty() {
        return [0.0; 4];
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    [mean, var.sqrt(), min, max]
}

/// PPP counters over `theta = beta / alpha` slots and the whole-flow total.
pub fn ppp(pkts: &[Pkt], alpha: f64, beta: f64) -> (Vec<u32>, usize) {
    let theta = (beta / alpha).round() as usize;
    let carrying: Vec<&Pkt> = pkts.iter().filter(|p| p.payload > 0).collect();
    let series: Vec<f64> = carrying.iter().map(|p| f64::from(p.payload)).collect();
    let peaks = peak_positions(&series);
    let mut counters = vec![0u32; theta];
    for &i in &peaks {
        for (k, c) in counters.iter_mut().enumerate() {
            if in_slot(carrying[i].t, k, alpha) {
                *c += 1;
            }
        }
    }
    (counters, peaks.len())
}

/// Number of complete buckets of `width` within `duration`.
pub fn complete_buckets(duration: f64, width: f64) -> usize {
    let e = SLOT_EPS * duration.abs().max(1.0);
    let mut n = 0;
    while (n + 1) as f64 * width <= duration + e {
        n += 1;
    }
    n
}

/// Byte-rate peak count over complete buckets.
pub fn brpp(pkts: &[Pkt], duration: f64, bucket: f64) -> usize {
    let n = complete_buckets(duration, bucket);
    let mut sums = vec![0.0; n];
    for p in pkts {
        // the true bucket is within one of the rounded quotient
        let guess = (p.t / bucket) as usize;
        for k in guess.saturating_sub(1)..=guess + 1 {
            if k < n && in_slot(p.t, k, bucket) {
                sums[k] += f64::from(p.payload);
            }
        }
    }
    let rates: Vec<f64> = sums.iter().map(|s| s / bucket).collect();
    peak_positions(&rates).len()
}

/// Window sums `[z * step, z * step + len)` of on-wire bytes, using a
/// prefix sum and binary searches over the sorted times.
pub fn window_sums(pkts: &[Pkt], duration: f64, len: f64, step: f64) -> Vec<f64> {
    let mut prefix = vec![0.0];
    for p in pkts {
        prefix.push(prefix.last().unwrap() + p.wire as f64);
    }
    let first_at_or_after = |x: f64| pkts.partition_point(|p| p.t < x);
    let mut out = Vec::new();
    let mut z = 0usize;
    while (z as f64 * step) < duration {
        let w = z as f64 * step;
        let (a, b) = (first_at_or_after(w), first_at_or_after(w + len));
        out.push(prefix[b] - prefix[a]);
        z += 1;
    }
    out
}

/// Peak values of the window sums, their summary and (for the caller to
/// use on the all-packets view) linearly interpolated quartiles.
pub fn brppsw(pkts: &[Pkt], duration: f64, len: f64, step: f64) -> (Vec<f64>, [f64; 4]) {
    let sums = window_sums(pkts, duration, len, step);
    let peaks: Vec<f64> = peak_positions(&sums).into_iter().map(|i| sums[i]).collect();
    let s = summary(&peaks);
    (peaks, s)
}

pub fn quartiles(x: &[f64]) -> [f64; 3] {
    if x.is_empty() {
        return [0.0; 3];
    }
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| {
        let h = (s.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        s[lo] + (h - lo as f64) * (s[hi] - s[lo])
    };
    [q(0.25), q(0.5), q(0.75)]
}
