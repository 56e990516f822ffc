//! Deterministic synthetic traffic.
//!
//! [`burst_corpus`] builds a two-class corpus whose classes draw packet
//! sizes, gaps, directions and TCP fields from the same distributions and
//! differ only in how payload sizes are ordered: `steady` flows shuffle
//! them, `bursty` flows arrange them into periodic unimodal bursts.
//! [`random_packets`] draws unstructured flows for property tests.

use std::fs;
use std::net::Ipv4Addr;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{write_text_trace, Endpoint, Flow, IngestError, PacketRecord, TcpFlags, Transport};

pub const BURSTY: &str = "bursty";
pub const STEADY: &str = "steady";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusConfig {
    pub flows_per_class: usize,
    pub min_packets: usize,
    pub max_packets: usize,
    /// Mean inter-arrival time, seconds.
    pub mean_gap: f64,
    /// Share of zero-payload packets.
    pub zero_payload_share: f64,
    /// Packets per burst, inclusive range.
    pub burst_len: (usize, usize),
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            flows_per_class: 60,
            min_packets: 700,
            max_packets: 900,
            mean_gap: 0.1,
            zero_payload_share: 0.15,
            burst_len: (30, 50),
            seed: 2024,
        }
    }
}

const TCP_HEADER: u32 = 40;

/// Arranges `values` into a rise-then-fall sequence with one maximum.
fn hump(values: &mut [u32]) {
    values.sort_unstable();
    let rising = values.iter().step_by(2).copied();
    let falling: Vec<u32> = values.iter().skip(1).step_by(2).copied().collect();
    let arranged: Vec<u32> = rising.chain(falling.into_iter().rev()).collect();
    values.copy_from_slice(&arranged);
}

fn payload_sizes(rng: &mut ChaCha8Rng, n: usize, zero_share: f64) -> Vec<u32> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            if u < zero_share {
                0
            } else if u < zero_share + (1.0 - zero_share) / 2.0 {
                rng.gen_range(40..400)
            } else {
                rng.gen_range(900..=1448)
            }
        })
        .collect()
}

fn corpus_flow(rng: &mut ChaCha8Rng, cfg: &CorpusConfig, bursty: bool, index: usize) -> Vec<PacketRecord> {
    let n = rng.gen_range(cfg.min_packets..=cfg.max_packets);
    let mut sizes = payload_sizes(rng, n, cfg.zero_payload_share);
    sizes.shuffle(rng);
    if bursty {
        let mut start = 0;
        while start < n {
            let len = rng.gen_range(cfg.burst_len.0..=cfg.burst_len.1).min(n - start);
            hump(&mut sizes[start..start + len]);
            start += len;
        }
    }
    let client = Endpoint::new(Ipv4Addr::new(10, 0, (index / 250) as u8, (index % 250) as u8 + 1), 40000 + index as u16);
    let server = Endpoint::new(Ipv4Addr::new(203, 0, 113, 10), 443);
    let window = Uniform::new_inclusive(1024u32, 65535);
    let mut t = 0.0f64;
    sizes
        .into_iter()
        .enumerate()
        .map(|(i, payload)| {
            if i > 0 {
                let u: f64 = rng.gen();
                t += (-(1.0 - u).ln() * cfg.mean_gap * 1e6).round() / 1e6;
            }
            let up = i == 0 || rng.gen_bool(0.3);
            let (src, dst) = if up { (client, server) } else { (server, client) };
            let mut flags = TcpFlags::ACK;
            if i == 0 {
                flags = TcpFlags::SYN;
            } else if payload > 0 {
                flags |= TcpFlags::PSH;
            }
            PacketRecord {
                timestamp: t,
                src,
                dst,
                transport: Transport::Tcp,
                payload_len: payload,
                header_len: TCP_HEADER,
                tcp_window: window.sample(rng),
                tcp_flags: flags,
                sni: None,
            }
        })
        .collect()
}

/// Labeled flows, alternating `bursty` and `steady`.
pub fn burst_corpus(cfg: &CorpusConfig) -> Vec<Flow> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..2 * cfg.flows_per_class)
        .map(|i| {
            let bursty = i % 2 == 0;
            let label = if bursty { BURSTY } else { STEADY };
            let packets = corpus_flow(&mut rng, cfg, bursty, i);
            Flow::from_packets(packets)
                .expect("generated packets share one 5-tuple")
                .with_label(label)
                .with_id(format!("{label}-{i:04}"))
        })
        .collect()
}

/// Writes each flow as `<dir>/<label>/<id>.trace`.
pub fn write_corpus(dir: &Path, flows: &[Flow]) -> Result<(), IngestError> {
    for f in flows {
        let sub = dir.join(f.label().unwrap_or("unlabeled"));
        fs::create_dir_all(&sub).map_err(|source| IngestError::Io {
            path: sub.clone(),
            source,
        })?;
        let path = sub.join(format!("{}.trace", f.id()));
        let file = fs::File::create(&path).map_err(|source| IngestError::Io {
            path: path.clone(),
            source,
        })?;
        write_text_trace(std::io::BufWriter::new(file), f.packets())?;
    }
    Ok(())
}

/// One flow of up to `max_packets` packets with millisecond-grid
/// timestamps (repeats allowed), heavily tied payload sizes and random
/// directions.
pub fn random_packets<R: Rng>(rng: &mut R, max_packets: usize) -> Vec<PacketRecord> {
    let n = rng.gen_range(1..=max_packets.max(1));
    let a = Endpoint::new(Ipv4Addr::new(192, 168, 1, 2), rng.gen_range(1024..65535));
    let b = Endpoint::new(Ipv4Addr::new(198, 51, 100, 7), 443);
    let gap_scale = *[1u32, 10, 100, 1000, 5000].choose(rng).expect("non-empty");
    let sizes = [0u32, 0, 1, 60, 100, 100, 576, 1200, 1448, 1448];
    let mut ms: u64 = 0;
    (0..n)
        .map(|i| {
            if i > 0 && rng.gen_bool(0.9) {
                ms += rng.gen_range(0..=u64::from(gap_scale));
            }
            let payload = if rng.gen_bool(0.7) {
                *sizes.choose(rng).expect("non-empty")
            } else {
                rng.gen_range(0..1500)
            };
            let (src, dst) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            PacketRecord {
                timestamp: ms as f64 / 1000.0,
                src,
                dst,
                transport: Transport::Tcp,
                payload_len: payload,
                header_len: rng.gen_range(20..=60),
                tcp_window: rng.gen_range(0..65536),
                tcp_flags: TcpFlags::from_bits_truncate(rng.gen()),
                sni: None,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::detect_peaks;
    use crate::ingest::{filter_elephant, DEFAULT_ELEPHANT_THRESHOLD};

    #[test]
    fn hump_has_one_peak() {
        let mut v = vec![5, 1, 9, 3, 7, 2, 8];
        hump(&mut v);
        assert_eq!(v, vec![1, 3, 7, 9, 8, 5, 2]);
        let s: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        assert_eq!(detect_peaks(&s).len(), 1);
    }

    #[test]
    fn corpus_is_deterministic_and_elephant() {
        let cfg = CorpusConfig {
            flows_per_class: 3,
            ..Default::default()
        };
        let a = burst_corpus(&cfg);
        let b = burst_corpus(&cfg);
        assert_eq!(a.len(), 6);
        assert!(a.iter().zip(&b).all(|(x, y)| x.packets() == y.packets()));
        assert_eq!(filter_elephant(a.clone(), DEFAULT_ELEPHANT_THRESHOLD).len(), 6);
        assert!(a.iter().all(|f| f.duration() > 60.0));
        assert_eq!(a[0].label(), Some(BURSTY));
        assert_eq!(a[1].label(), Some(STEADY));
    }

    #[test]
    fn random_flows_are_single_flows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = random_packets(&mut rng, 300);
            assert!(Flow::from_packets(p).is_ok());
        }
    }
}
