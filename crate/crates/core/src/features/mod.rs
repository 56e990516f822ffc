//! Per-flow statistical features: inter-arrival times, TCP windows, packet
//! counts, flags, headers, payloads and the peak-point families.

mod names;
mod peaks;

use std::io::Write;

use crate::ingest::{Flow, PacketRecord, TcpFlags};
use crate::stats::{ratio, Summary};
use crate::Exec;

pub use names::{
    describe, feature_dictionary, feature_index, peak_feature_names, FEATURE_COUNT,
    FEATURE_NAMES, PEAK_FEATURES_START,
};
pub use peaks::{
    brpp_features, brppsw_features, byte_rate_series, detect_peaks, ppp_features, window_sums,
    Brppsw, BrppswStats, PeakParams, PerView, PppStats,
};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("flow has no packets")]
    EmptyFlow,
    #[error("invalid peak parameters: {0}")]
    InvalidParams(String),
    #[error("flow {flow_id}: {source}")]
    Flow {
        flow_id: String,
        #[source]
        source: Box<FeatureError>,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// The 89 features of one flow, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub flow_id: String,
    pub label: Option<String>,
    pub values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn names(&self) -> &'static [&'static str; FEATURE_COUNT] {
        &FEATURE_NAMES
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }
}

struct Writer<'a> {
    values: &'a mut [f64; FEATURE_COUNT],
    at: usize,
}

impl Writer<'_> {
    fn push(&mut self, v: f64) {
        self.values[self.at] = v;
        self.at += 1;
    }

    fn summary(&mut self, s: Summary) {
        for v in [s.mean, s.min, s.max, s.std] {
            self.push(v);
        }
    }
}

fn iat(pkts: &[&PacketRecord]) -> Summary {
    let gaps: Vec<f64> = pkts
        .windows(2)
        .map(|w| w[1].timestamp - w[0].timestamp)
        .collect();
    Summary::of(&gaps)
}

fn of<T>(pkts: &[&PacketRecord], f: impl Fn(&PacketRecord) -> T) -> Vec<f64>
where
    T: Into<f64>,
{
    pkts.iter().map(|p| f(p).into()).collect()
}

fn flag_count(pkts: &[&PacketRecord], flag: TcpFlags) -> f64 {
    pkts.iter().filter(|p| p.tcp_flags.contains(flag)).count() as f64
}

/// Computes all 89 features of `flow`.
pub fn extract_features(flow: &Flow, params: &PeakParams) -> Result<FeatureVector, FeatureError> {
    params.validate()?;
    if flow.is_empty() {
        return Err(FeatureError::EmptyFlow);
    }
    let all: Vec<&PacketRecord> = flow.packets().iter().collect();
    let up: Vec<&PacketRecord> = flow.upstream().collect();
    let down: Vec<&PacketRecord> = flow.downstream().collect();
    let views = [&up, &down, &all];
    let duration = flow.duration();

    let mut values = [0.0; FEATURE_COUNT];
    let mut w = Writer {
        values: &mut values,
        at: 0,
    };

    for v in views {
        w.summary(iat(v));
    }
    for v in views {
        let win = of(v, |p| p.tcp_window);
        w.push(win.iter().sum());
        w.summary(Summary::of(&win));
    }

    let counts = views.map(|v| v.len() as f64);
    for c in counts {
        w.push(c);
    }
    for c in counts {
        w.push(ratio(c, duration));
    }
    w.push(ratio(counts[1], counts[0]));

    for flag in [
        TcpFlags::FIN,
        TcpFlags::SYN,
        TcpFlags::PSH,
        TcpFlags::ACK,
        TcpFlags::RST,
        TcpFlags::URG,
        TcpFlags::ECE,
        TcpFlags::CWR,
    ] {
        w.push(flag_count(&all, flag));
    }
    for v in [&up, &down] {
        w.push(flag_count(v, TcpFlags::PSH));
        w.push(flag_count(v, TcpFlags::URG));
    }

    let hdr = views.map(|v| of(v, |p| p.header_len).iter().sum::<f64>());
    let pay_sum = views.map(|v| of(v, |p| p.payload_len).iter().sum::<f64>());
    for h in hdr {
        w.push(h);
    }
    for (h, p) in hdr.iter().zip(pay_sum) {
        w.push(ratio(*h, p));
    }
    for v in views {
        w.summary(Summary::of(&of(v, |p| p.payload_len)));
    }

    debug_assert_eq!(w.at, PEAK_FEATURES_START);
    let ppp = ppp_features(flow, params)?;
    for s in [&ppp.up, &ppp.down, &ppp.all] {
        w.push(s.total as f64);
    }
    for v in [ppp.all.mean, ppp.all.min, ppp.all.max, ppp.all.std] {
        w.push(v);
    }

    let brpp = brpp_features(flow, params)?;
    for c in [brpp.up, brpp.down, brpp.all] {
        w.push(c as f64);
    }

    let sw = brppsw_features(flow, params)?;
    for s in [&sw.views.up, &sw.views.down, &sw.views.all] {
        w.summary(s.summary);
    }
    for q in sw.quartiles {
        w.push(q);
    }
    debug_assert_eq!(w.at, FEATURE_COUNT);

    Ok(FeatureVector {
        flow_id: flow.id().to_owned(),
        label: flow.label().map(str::to_owned),
        values,
    })
}

/// Feature vectors of many flows; row `i` belongs to input flow `i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn names(&self) -> &'static [&'static str; FEATURE_COUNT] {
        &FEATURE_NAMES
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes `flow_id`, the 89 features and `label` as CSV. Floats use the
    /// shortest representation that reads back to the same value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["flow_id"];
        header.extend_from_slice(&FEATURE_NAMES);
        header.push("label");
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(FEATURE_COUNT + 2);
        for row in &self.rows {
            record.clear();
            record.push(row.flow_id.clone());
            record.extend(row.values.iter().map(|v| v.to_string()));
            record.push(row.label.clone().unwrap_or_default());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn extract_matrix(flows: &[Flow], params: &PeakParams) -> Result<FeatureMatrix, FeatureError> {
    extract_matrix_with(flows, params, Exec::default())
}

pub fn extract_matrix_with(
    flows: &[Flow],
    params: &PeakParams,
    exec: Exec,
) -> Result<FeatureMatrix, FeatureError> {
    params.validate()?;
    let rows = exec
        .map(flows, |f| {
            extract_features(f, params).map_err(|e| FeatureError::Flow {
                flow_id: f.id().to_owned(),
                source: Box::new(e),
            })
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
    Ok(FeatureMatrix { rows })
}
