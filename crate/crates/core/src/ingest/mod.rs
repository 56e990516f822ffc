//! Packet trace ingestion: capture and text-trace readers, bidirectional
//! flow assembly, the elephant-flow filter and SNI-based labeling.

mod flow;
mod label;
pub mod pcap;
mod text;
pub mod tls;

use std::fmt;
use std::net::IpAddr;
use std::path::PathBuf;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

pub use flow::{assemble_flows, filter_elephant, FiveTuple, Flow, DEFAULT_ELEPHANT_THRESHOLD};
pub use label::{label_flows, LabelRules, Labeled};
pub use pcap::read_capture;
pub use text::{parse_text_trace, read_text_trace, write_text_trace};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("not a pcap file (magic {0:#010x})")]
    BadMagic(u32),
    #[error("unsupported pcap link type {0}")]
    UnsupportedLinkType(u32),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("timestamp {current} at record {index} precedes {previous}")]
    OutOfOrder {
        index: usize,
        previous: f64,
        current: f64,
    },
    #[error("invalid label pattern {pattern:?}: {msg}")]
    Pattern { pattern: String, msg: String },
    #[error("record cannot be written as a text trace: {0}")]
    Unwritable(String),
    #[error("flow has no packets")]
    EmptyFlow,
    #[error("flow packets do not match key {0}")]
    ForeignPacket(String),
}

/// Address and port of one side of a conversation.
///
/// Ordering is lexicographic on the address, then the port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    pub addr: IpAddr,
    pub port: u16,
}

impl Endpoint {
    pub fn new(addr: impl Into<IpAddr>, port: u16) -> Self {
        Endpoint {
            addr: addr.into(),
            port,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.addr {
            IpAddr::V4(a) => write!(f, "{a}:{}", self.port),
            IpAddr::V6(a) => write!(f, "[{a}]:{}", self.port),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Transport {
    Tcp,
    Udp,
}

impl Transport {
    pub fn as_str(self) -> &'static str {
        match self {
            Transport::Tcp => "TCP",
            Transport::Udp => "UDP",
        }
    }
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

bitflags! {
    /// TCP control bits, laid out as in byte 13 of the TCP header.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct TcpFlags: u8 {
        const FIN = 0x01;
        const SYN = 0x02;
        const RST = 0x04;
        const PSH = 0x08;
        const ACK = 0x10;
        const URG = 0x20;
        const ECE = 0x40;
        const CWR = 0x80;
    }
}

const FLAG_LETTERS: [(char, TcpFlags); 8] = [
    ('F', TcpFlags::FIN),
    ('S', TcpFlags::SYN),
    ('P', TcpFlags::PSH),
    ('A', TcpFlags::ACK),
    ('R', TcpFlags::RST),
    ('U', TcpFlags::URG),
    ('E', TcpFlags::ECE),
    ('C', TcpFlags::CWR),
];

impl TcpFlags {
    /// Parses a string over `FSPARUEC`; order and case do not matter.
    pub fn from_letters(s: &str) -> Option<Self> {
        let mut flags = TcpFlags::empty();
        for ch in s.chars() {
            let up = ch.to_ascii_uppercase();
            let (_, f) = FLAG_LETTERS.iter().find(|(l, _)| *l == up)?;
            flags |= *f;
        }
        Some(flags)
    }

    /// Letters of the set flags in `FSPARUEC` order.
    pub fn to_letters(self) -> String {
        FLAG_LETTERS
            .iter()
            .filter(|(_, f)| self.contains(*f))
            .map(|(l, _)| *l)
            .collect()
    }
}

/// One observed TCP or UDP packet.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    /// Seconds since the start of the trace.
    pub timestamp: f64,
    pub src: Endpoint,
    pub dst: Endpoint,
    pub transport: Transport,
    pub payload_len: u32,
    /// Network plus transport header bytes.
    pub header_len: u32,
    /// Advertised receive window; 0 for UDP.
    pub tcp_window: u32,
    /// Empty for UDP.
    pub tcp_flags: TcpFlags,
    /// Server name from a TLS ClientHello carried by this packet.
    pub sni: Option<String>,
}

impl PacketRecord {
    /// On-wire size used by the sliding-window sums.
    pub fn wire_len(&self) -> u64 {
        self.payload_len as u64 + self.header_len as u64
    }
}

fn check_monotone(index: usize, previous: Option<f64>, current: f64) -> Result<(), IngestError> {
    match previous {
        Some(p) if current < p => Err(IngestError::OutOfOrder {
            index,
            previous: p,
            current,
        }),
        _ => Ok(()),
    }
}
