use std::fmt;

use indexmap::IndexMap;

use super::{Endpoint, IngestError, PacketRecord, TcpFlags, Transport};

/// Flows with fewer non-zero-payload packets than this are mice flows.
pub const DEFAULT_ELEPHANT_THRESHOLD: usize = 500;

/// Direction-free flow key: `a <= b`, so both directions of a conversation
/// share one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiveTuple {
    pub a: Endpoint,
    pub b: Endpoint,
    pub transport: Transport,
}

impl FiveTuple {
    pub fn new(x: Endpoint, y: Endpoint, transport: Transport) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        FiveTuple { a, b, transport }
    }

    pub fn of(p: &PacketRecord) -> Self {
        FiveTuple::new(p.src, p.dst, p.transport)
    }

    pub fn contains(&self, e: &Endpoint) -> bool {
        self.a == *e || self.b == *e
    }

    /// The endpoint that is not `e`.
    pub fn peer(&self, e: &Endpoint) -> Endpoint {
        if self.a == *e {
            self.b
        } else {
            self.a
        }
    }
}

impl fmt::Display for FiveTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.transport, self.a, self.b)
    }
}

/// All packets of one bidirectional conversation, in arrival order.
///
/// Upstream packets are those sent by `client`; every other packet is
/// downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    id: String,
    key: FiveTuple,
    client: Endpoint,
    packets: Vec<PacketRecord>,
    label: Option<String>,
    sni: Option<String>,
    nonzero_payload_count: usize,
}

impl Flow {
    /// Builds a flow from packets that all belong to one conversation.
    /// The client is inferred as in [`assemble_flows`].
    pub fn from_packets(packets: Vec<PacketRecord>) -> Result<Self, IngestError> {
        let first = packets
            .first()
            .ok_or(IngestError::EmptyFlow)?;
        let key = FiveTuple::of(first);
        if packets.iter().any(|p| FiveTuple::of(p) != key) {
            return Err(IngestError::ForeignPacket(key.to_string()));
        }
        Ok(Flow::build(key, packets))
    }

    fn build(key: FiveTuple, packets: Vec<PacketRecord>) -> Self {
        let client = infer_client(&packets);
        let sni = packets.iter().find_map(|p| p.sni.clone());
        let nonzero_payload_count = packets.iter().filter(|p| p.payload_len > 0).count();
        Flow {
            id: key.to_string(),
            key,
            client,
            packets,
            label: None,
            sni,
            nonzero_payload_count,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn key(&self) -> &FiveTuple {
        &self.key
    }

    pub fn client(&self) -> Endpoint {
        self.client
    }

    pub fn server(&self) -> Endpoint {
        self.key.peer(&self.client)
    }

    pub fn packets(&self) -> &[PacketRecord] {
        &self.packets
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn sni(&self) -> Option<&str> {
        self.sni.as_deref()
    }

    pub fn nonzero_payload_count(&self) -> usize {
        self.nonzero_payload_count
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn is_upstream(&self, p: &PacketRecord) -> bool {
        p.src == self.client
    }

    pub fn upstream(&self) -> impl Iterator<Item = &PacketRecord> {
        self.packets.iter().filter(move |p| self.is_upstream(p))
    }

    pub fn downstream(&self) -> impl Iterator<Item = &PacketRecord> {
        self.packets.iter().filter(move |p| !self.is_upstream(p))
    }

    /// Last minus first timestamp; 0 for fewer than two packets.
    pub fn duration(&self) -> f64 {
        match (self.packets.first(), self.packets.last()) {
            (Some(a), Some(b)) => b.timestamp - a.timestamp,
            _ => 0.0,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn set_label(&mut self, label: Option<String>) {
        self.label = label;
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Re-roots the flow at the other endpoint, turning every upstream
    /// packet into a downstream one and vice versa.
    pub fn with_client_swapped(mut self) -> Self {
        self.client = self.server();
        self
    }
}

/// Initiator of a conversation: the sender of the first pure SYN, the
/// receiver of the first SYN-ACK, or else the sender of the first packet.
fn infer_client(packets: &[PacketRecord]) -> Endpoint {
    for p in packets {
        if p.transport == Transport::Tcp && p.tcp_flags.contains(TcpFlags::SYN) {
            return if p.tcp_flags.contains(TcpFlags::ACK) {
                p.dst
            } else {
                p.src
            };
        }
    }
    packets[0].src
}

/// Groups a packet stream into one [`Flow`] per canonical 5-tuple, in order
/// of first appearance. Packet order within a flow follows the stream.
pub fn assemble_flows<I>(packets: I) -> Vec<Flow>
where
    I: IntoIterator<Item = PacketRecord>,
{
    let mut groups: IndexMap<FiveTuple, Vec<PacketRecord>> = IndexMap::new();
    for p in packets {
        groups.entry(FiveTuple::of(&p)).or_default().push(p);
    }
    groups
        .into_iter()
        .map(|(key, pkts)| Flow::build(key, pkts))
        .collect()
}

/// Keeps flows with at least `threshold` non-zero-payload packets.
pub fn filter_elephant(flows: Vec<Flow>, threshold: usize) -> Vec<Flow> {
    flows
        .into_iter()
        .filter(|f| f.nonzero_payload_count >= threshold)
        .collect()
}
