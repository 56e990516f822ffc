//! Payload peak points (PPP), byte-rate peak points (BRPP) and byte-rate
//! peaks over sliding windows (BRPPSW).

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::ingest::{Flow, PacketRecord};
use crate::stats::{quantile, Summary};

/// Time parameters of the peak-point features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakParams {
    /// Width of one PPP counter, seconds.
    pub alpha: f64,
    /// Horizon covered by the PPP counters, seconds; a multiple of `alpha`.
    pub beta: f64,
    /// Byte-rate bucket length, seconds.
    pub bucket: f64,
    /// Sliding-window length, seconds.
    pub window: f64,
    /// Window step as a fraction of `window`, in (0, 1].
    pub offset: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams {
            alpha: 5.0,
            beta: 60.0,
            bucket: 1.0,
            window: 3.0,
            offset: 0.5,
        }
    }
}

impl PeakParams {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |msg: String| Err(FeatureError::InvalidParams(msg));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.alpha) || !positive(self.beta) {
            return bad(format!("alpha and beta must be > 0 (got {}, {})", self.alpha, self.beta));
        }
        let theta = self.beta / self.alpha;
        if theta.round() < 1.0 || (theta - theta.round()).abs() > 1e-9 * theta.max(1.0) {
            return bad(format!("alpha {} must divide beta {}", self.alpha, self.beta));
        }
        if !positive(self.bucket) {
            return bad(format!("bucket length must be > 0 (got {})", self.bucket));
        }
        if !positive(self.window) {
            return bad(format!("window length must be > 0 (got {})", self.window));
        }
        if !(self.offset > 0.0 && self.offset <= 1.0) {
            return bad(format!("offset factor must lie in (0, 1] (got {})", self.offset));
        }
        Ok(())
    }

    /// Number of PPP counters, `beta / alpha`.
    pub fn theta(&self) -> usize {
        (self.beta / self.alpha).round() as usize
    }

    /// Distance between consecutive window starts, `offset * window`.
    pub fn step(&self) -> f64 {
        self.offset * self.window
    }
}

/// Upstream, downstream and all-packets variants of one quantity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerView<T> {
    pub up: T,
    pub down: T,
    pub all: T,
}

impl<T> PerView<T> {
    fn build(flow: &Flow, mut f: impl FnMut(&mut dyn Iterator<Item = &PacketRecord>) -> T) -> Self {
        PerView {
            up: f(&mut flow.upstream()),
            down: f(&mut flow.downstream()),
            all: f(&mut flow.packets().iter()),
        }
    }
}

/// Interior local maxima: index `i` (0-based, `0 < i < len - 1`) with
/// `series[i] >= series[i - 1]` and `series[i] >= series[i + 1]`.
/// Plateaus produce one peak per plateau point.
pub fn detect_peaks(series: &[f64]) -> Vec<(usize, f64)> {
    series
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1] >= w[0] && w[1] >= w[2])
        .map(|(i, w)| (i + 1, w[1]))
        .collect()
}

/// Relative tolerance on slot boundaries, so `0.3` lands in slot 3 of
/// width `0.1`.
pub(crate) const SLOT_EPS: f64 = 1e-9;

/// Index `k` of the half-open slot `[k * width, (k + 1) * width)` holding
/// `t >= 0`.
pub(crate) fn slot(t: f64, width: f64) -> usize {
    let eps = SLOT_EPS * t.abs().max(1.0);
    let mut k = (t / width).floor().max(0.0) as usize;
    while k > 0 && t + eps < k as f64 * width {
        k -= 1;
    }
    while t + eps >= (k + 1) as f64 * width {
        k += 1;
    }
    k
}

/// Number of complete slots of `width` that fit in `span`.
pub(crate) fn complete_slots(span: f64, width: f64) -> usize {
    let eps = SLOT_EPS * span.abs().max(1.0);
    let mut n = (span / width).floor().max(0.0) as usize;
    while n > 0 && n as f64 * width > span + eps {
        n -= 1;
    }
    while (n + 1) as f64 * width <= span + eps {
        n += 1;
    }
    n
}

fn flow_start(flow: &Flow) -> f64 {
    flow.packets().first().map_or(0.0, |p| p.timestamp)
}

/// Payload-peak statistics of one direction view.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PppStats {
    /// Peaks per `alpha`-second slot over the first `beta` seconds.
    pub counters: Vec<u32>,
    /// Peaks over the whole flow.
    pub total: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn ppp_features(flow: &Flow, params: &PeakParams) -> Result<PerView<PppStats>, FeatureError> {
    params.validate()?;
    let start = flow_start(flow);
    let theta = params.theta();
    Ok(PerView::build(flow, |pkts| {
        let carrying: Vec<&PacketRecord> = pkts.filter(|p| p.payload_len > 0).collect();
        let series: Vec<f64> = carrying.iter().map(|p| p.payload_len as f64).collect();
        let peaks = detect_peaks(&series);
        let mut counters = vec![0u32; theta];
        for (i, _) in &peaks {
            let k = slot(carrying[*i].timestamp - start, params.alpha);
            if k < theta {
                counters[k] += 1;
            }
        }
        let as_f64: Vec<f64> = counters.iter().map(|&c| c as f64).collect();
        let s = Summary::of(&as_f64);
        PppStats {
            counters,
            total: peaks.len(),
            mean: s.mean,
            std: s.std,
            min: s.min,
            max: s.max,
        }
    }))
}

/// Byte rate (payload bytes per second) of every complete `bucket`-second
/// slot of the flow, for one view.
pub fn byte_rate_series(flow: &Flow, params: &PeakParams) -> PerView<Vec<f64>> {
    let start = flow_start(flow);
    let n = complete_slots(flow.duration(), params.bucket);
    PerView::build(flow, |pkts| {
        let mut sums = vec![0.0f64; n];
        for p in pkts {
            let k = slot(p.timestamp - start, params.bucket);
            if k < n {
                sums[k] += p.payload_len as f64;
            }
        }
        sums.into_iter().map(|s| s / params.bucket).collect()
    })
}

/// Number of byte-rate peaks per view.
pub fn brpp_features(flow: &Flow, params: &PeakParams) -> Result<PerView<usize>, FeatureError> {
    params.validate()?;
    let rates = byte_rate_series(flow, params);
    Ok(PerView {
        up: detect_peaks(&rates.up).len(),
        down: detect_peaks(&rates.down).len(),
        all: detect_peaks(&rates.all).len(),
    })
}

/// On-wire bytes inside every sliding window `[z * step, z * step + L)`,
/// `z = 0, 1, ..` while the start precedes the flow duration.
pub fn window_sums(flow: &Flow, params: &PeakParams) -> PerView<Vec<f64>> {
    let start = flow_start(flow);
    let duration = flow.duration();
    let step = params.step();
    let mut starts = Vec::new();
    let mut z = 0usize;
    loop {
        let w = z as f64 * step;
        if w >= duration {
            break;
        }
        starts.push(w);
        z += 1;
    }
    PerView::build(flow, |pkts| {
        let times: Vec<(f64, f64)> = pkts
            .map(|p| (p.timestamp - start, p.wire_len() as f64))
            .collect();
        // window starts and ends both increase, so two cursors suffice
        let (mut lo, mut hi) = (0usize, 0usize);
        let mut out = Vec::with_capacity(starts.len());
        for &w in &starts {
            let end = w + params.window;
            while hi < times.len() && times[hi].0 < end {
                hi += 1;
            }
            while lo < hi && times[lo].0 < w {
                lo += 1;
            }
            out.push(times[lo..hi].iter().map(|t| t.1).sum());
        }
        out
    })
}

/// Sliding-window byte-peak statistics of one view.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BrppswStats {
    /// Window sums that are peaks of the window-sum sequence.
    pub peaks: Vec<f64>,
    pub summary: Summary,
}

/// BRPPSW statistics per view plus the quartiles of the all-packets peaks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Brppsw {
    pub views: PerView<BrppswStats>,
    pub quartiles: [f64; 3],
}

pub fn brppsw_features(flow: &Flow, params: &PeakParams) -> Result<Brppsw, FeatureError> {
    params.validate()?;
    let sums = window_sums(flow, params);
    let stats = |r: &[f64]| {
        let peaks: Vec<f64> = detect_peaks(r).into_iter().map(|(_, v)| v).collect();
        let summary = Summary::of(&peaks);
        BrppswStats { peaks, summary }
    };
    let views = PerView {
        up: stats(&sums.up),
        down: stats(&sums.down),
        all: stats(&sums.all),
    };
    let quartiles = [0.25, 0.5, 0.75].map(|q| quantile(&views.all.peaks, q));
    Ok(Brppsw { views, quartiles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Endpoint, TcpFlags, Transport};
    use proptest::prelude::*;
    use std::net::Ipv4Addr;

    fn positions(series: &[f64]) -> Vec<usize> {
        detect_peaks(series).into_iter().map(|(i, _)| i).collect()
    }

    #[test]
    fn peak_examples() {
        assert_eq!(positions(&[1.0, 3.0, 2.0, 2.0, 5.0, 4.0]), vec![1, 4]);
        assert!(positions(&[1.0, 2.0, 3.0, 4.0]).is_empty());
        assert_eq!(positions(&[1.0, 2.0, 2.0, 1.0]), vec![1, 2]);
        assert!(positions(&[]).is_empty());
        assert!(positions(&[5.0, 5.0]).is_empty());
        assert_eq!(positions(&[100.0, 300.0, 100.0]), vec![1]);
        assert_eq!(positions(&[7.0; 5]), vec![1, 2, 3]);
        let vals: Vec<f64> = detect_peaks(&[10.0, 50.0, 20.0, 60.0, 30.0])
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        assert_eq!(vals, vec![50.0, 60.0]);
    }

    proptest! {
        #[test]
        fn peak_count_bound(series in proptest::collection::vec(0u8..4, 0..50)) {
            let s: Vec<f64> = series.into_iter().map(f64::from).collect();
            prop_assert!(detect_peaks(&s).len() <= s.len().saturating_sub(2));
        }
    }

    #[test]
    fn params_validation() {
        assert!(PeakParams::default().validate().is_ok());
        assert_eq!(PeakParams::default().theta(), 12);
        assert_eq!(PeakParams::default().step(), 1.5);
        let bad = [
            PeakParams { alpha: 7.0, ..Default::default() },
            PeakParams { offset: 0.0, ..Default::default() },
            PeakParams { offset: 1.5, ..Default::default() },
            PeakParams { window: 0.0, ..Default::default() },
            PeakParams { bucket: -1.0, ..Default::default() },
            PeakParams { beta: f64::NAN, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
        let fine = PeakParams { alpha: 0.1, beta: 0.3, ..Default::default() };
        assert!(fine.validate().is_ok());
        assert_eq!(fine.theta(), 3);
    }

    #[test]
    fn slots_follow_products() {
        assert_eq!(slot(0.0, 5.0), 0);
        assert_eq!(slot(4.999, 5.0), 0);
        assert_eq!(slot(5.0, 5.0), 1);
        assert_eq!(slot(0.3, 0.1), 3);
        assert_eq!(complete_slots(2.999, 1.0), 2);
        assert_eq!(complete_slots(3.0, 1.0), 3);
        assert_eq!(complete_slots(0.0, 1.0), 0);
    }

    fn down(t: f64, payload: u32) -> PacketRecord {
        PacketRecord {
            timestamp: t,
            src: Endpoint::new(Ipv4Addr::new(1, 1, 1, 1), 443),
            dst: Endpoint::new(Ipv4Addr::new(10, 0, 0, 2), 5555),
            transport: Transport::Udp,
            payload_len: payload,
            header_len: 28,
            tcp_window: 0,
            tcp_flags: TcpFlags::empty(),
            sni: None,
        }
    }

    fn up(t: f64, payload: u32) -> PacketRecord {
        let mut p = down(t, payload);
        std::mem::swap(&mut p.src, &mut p.dst);
        p
    }

    fn flow(mut pkts: Vec<PacketRecord>) -> Flow {
        // an upstream opener fixes the client
        pkts.insert(0, up(0.0, 0));
        Flow::from_packets(pkts).unwrap()
    }

    #[test]
    fn ppp_slot_assignment() {
        // peaks at t=2 and t=7 in the downstream series
        let f = flow(vec![
            down(1.0, 100),
            down(2.0, 900),
            down(3.0, 100),
            down(6.0, 100),
            down(7.0, 900),
            down(8.0, 100),
        ]);
        let ppp = ppp_features(&f, &PeakParams::default()).unwrap();
        assert_eq!(ppp.down.counters.len(), 12);
        assert_eq!(&ppp.down.counters[..3], &[1, 1, 0]);
        assert_eq!(ppp.down.counters.iter().sum::<u32>(), 2);
        assert_eq!(ppp.down.total, 2);
        assert_eq!(ppp.down.max, 1.0);
        assert_eq!(ppp.down.min, 0.0);
        assert!((ppp.down.mean - 2.0 / 12.0).abs() < 1e-15);
        // the upstream opener carries no payload
        assert_eq!(ppp.up, PppStats { counters: vec![0; 12], ..Default::default() });
        assert_eq!(ppp.all.counters, ppp.down.counters);
    }

    #[test]
    fn ppp_without_peaks() {
        let f = flow(vec![down(1.0, 10), down(2.0, 20), down(3.0, 30)]);
        let ppp = ppp_features(&f, &PeakParams::default()).unwrap();
        assert_eq!(ppp.all.total, 0);
        assert_eq!((ppp.all.mean, ppp.all.std), (0.0, 0.0));
    }

    #[test]
    fn zero_payload_packets_do_not_break_runs() {
        let f = flow(vec![down(1.0, 10), down(1.5, 0), down(2.0, 50), down(2.5, 0), down(3.0, 20)]);
        let ppp = ppp_features(&f, &PeakParams::default()).unwrap();
        assert_eq!(ppp.all.total, 1);
    }

    #[test]
    fn brpp_counts() {
        // buckets [0,1) [1,2) [2,3): rates 100, 300, 100
        let f = flow(vec![down(0.5, 100), down(1.5, 300), down(2.5, 100), down(3.0, 1)]);
        let rates = byte_rate_series(&f, &PeakParams::default());
        assert_eq!(rates.all, vec![100.0, 300.0, 100.0]);
        assert_eq!(brpp_features(&f, &PeakParams::default()).unwrap().all, 1);

        let short = flow(vec![down(0.5, 100), down(1.5, 300), down(2.9, 100)]);
        assert_eq!(brpp_features(&short, &PeakParams::default()).unwrap().all, 0);

        let constant: Vec<PacketRecord> = (0..10).map(|i| down(i as f64 + 0.5, 100)).collect();
        let f = flow(constant);
        // duration 9.5 -> 9 complete buckets, rate 100 each, 7 interior points
        assert_eq!(brpp_features(&f, &PeakParams::default()).unwrap().all, 7);
    }

    #[test]
    fn window_starts_step_by_offset() {
        let f = flow(vec![down(1.0, 72), down(2.0, 72), down(4.0, 72), down(6.0, 72)]);
        let sums = window_sums(&f, &PeakParams::default());
        // starts 0, 1.5, 3, 4.5 (all < duration 6); packet size 100 bytes
        assert_eq!(sums.down, vec![200.0, 200.0, 100.0, 100.0]);
        assert_eq!(sums.all, vec![228.0, 200.0, 100.0, 100.0]);
    }

    #[test]
    fn brppsw_peak_values() {
        let f = flow(vec![down(1.0, 72), down(2.0, 72), down(4.0, 72), down(6.0, 72)]);
        let b = brppsw_features(&f, &PeakParams::default()).unwrap();
        assert_eq!(b.views.down.peaks, vec![200.0]);
        assert_eq!(b.views.down.summary.mean, 200.0);
        assert!(b.views.all.peaks.is_empty());
        assert_eq!(b.quartiles, [0.0; 3]);
        let empty = brppsw_features(&flow(vec![down(1.0, 5)]), &PeakParams::default()).unwrap();
        assert_eq!(empty, Brppsw::default());
    }
}
