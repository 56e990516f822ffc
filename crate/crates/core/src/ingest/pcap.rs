//! Reader and writer for the classic libpcap capture format.
//!
//! Supported link types: Ethernet (with 802.1Q/802.1ad tags), BSD loopback,
//! raw IPv4/IPv6 and Linux cooked capture v1/v2.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::path::Path;

use log::{debug, warn};

use super::{check_monotone, tls, Endpoint, IngestError, PacketRecord, TcpFlags, Transport};

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;

pub const LINKTYPE_NULL: u32 = 0;
pub const LINKTYPE_ETHERNET: u32 = 1;
pub const LINKTYPE_RAW: u32 = 101;
pub const LINKTYPE_LINUX_SLL: u32 = 113;
pub const LINKTYPE_IPV4: u32 = 228;
pub const LINKTYPE_IPV6: u32 = 229;
pub const LINKTYPE_LINUX_SLL2: u32 = 276;

const PROTO_TCP: u8 = 6;
const PROTO_UDP: u8 = 17;

#[derive(Debug, Clone, Copy)]
struct GlobalHeader {
    big_endian: bool,
    nanos: bool,
    link_type: u32,
}

impl GlobalHeader {
    fn u32(&self, b: &[u8]) -> u32 {
        let a = [b[0], b[1], b[2], b[3]];
        if self.big_endian {
            u32::from_be_bytes(a)
        } else {
            u32::from_le_bytes(a)
        }
    }
}

/// Streams [`PacketRecord`]s out of a pcap byte stream.
///
/// Frames that are not IPv4/IPv6 carrying TCP or UDP are skipped. Timestamps
/// are rebased so the first record of the capture sits at 0.
pub struct CaptureReader<R> {
    inner: R,
    header: GlobalHeader,
    origin_ns: Option<i128>,
    last_ts: Option<f64>,
    index: usize,
    done: bool,
}

impl<R: Read> CaptureReader<R> {
    pub fn new(mut inner: R) -> Result<Self, IngestError> {
        let mut buf = [0u8; 24];
        inner.read_exact(&mut buf)?;
        let le = u32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]);
        let (big_endian, nanos) = match le {
            MAGIC_MICROS => (false, false),
            MAGIC_NANOS => (false, true),
            m if m.swap_bytes() == MAGIC_MICROS => (true, false),
            m if m.swap_bytes() == MAGIC_NANOS => (true, true),
            m => return Err(IngestError::BadMagic(m)),
        };
        let mut header = GlobalHeader {
            big_endian,
            nanos,
            link_type: 0,
        };
        header.link_type = header.u32(&buf[20..24]) & 0x0fff_ffff;
        match header.link_type {
            LINKTYPE_NULL | LINKTYPE_ETHERNET | LINKTYPE_RAW | 12 | LINKTYPE_LINUX_SLL
            | LINKTYPE_IPV4 | LINKTYPE_IPV6 | LINKTYPE_LINUX_SLL2 => {}
            other => return Err(IngestError::UnsupportedLinkType(other)),
        }
        Ok(CaptureReader {
            inner,
            header,
            origin_ns: None,
            last_ts: None,
            index: 0,
            done: false,
        })
    }

    pub fn link_type(&self) -> u32 {
        self.header.link_type
    }

    /// Next TCP/UDP record, `Ok(None)` at end of capture.
    pub fn next_record(&mut self) -> Result<Option<PacketRecord>, IngestError> {
        while !self.done {
            let Some((ts_ns, frame)) = self.next_frame()? else {
                self.done = true;
                break;
            };
            let origin = *self.origin_ns.get_or_insert(ts_ns);
            let Some(mut rec) = decode_frame(self.header.link_type, &frame) else {
                continue;
            };
            rec.timestamp = (ts_ns - origin) as f64 / 1e9;
            check_monotone(self.index, self.last_ts, rec.timestamp)?;
            self.last_ts = Some(rec.timestamp);
            self.index += 1;
            return Ok(Some(rec));
        }
        Ok(None)
    }

    fn next_frame(&mut self) -> Result<Option<(i128, Vec<u8>)>, IngestError> {
        let mut hdr = [0u8; 16];
        match read_full(&mut self.inner, &mut hdr)? {
            0 => return Ok(None),
            16 => {}
            n => {
                warn!("truncated pcap record header ({n} of 16 bytes); stopping");
                return Ok(None);
            }
        }
        let sec = self.header.u32(&hdr[0..4]) as i128;
        let frac = self.header.u32(&hdr[4..8]) as i128;
        let incl = self.header.u32(&hdr[8..12]) as usize;
        let ts_ns = sec * 1_000_000_000 + if self.header.nanos { frac } else { frac * 1000 };
        let mut frame = vec![0u8; incl];
        let got = read_full(&mut self.inner, &mut frame)?;
        if got < incl {
            warn!("truncated pcap record ({got} of {incl} bytes); stopping");
            return Ok(None);
        }
        Ok(Some((ts_ns, frame)))
    }
}

impl<R: Read> Iterator for CaptureReader<R> {
    type Item = Result<PacketRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Reads every TCP/UDP packet of a pcap file.
pub fn read_capture(path: impl AsRef<Path>) -> Result<Vec<PacketRecord>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    let reader = CaptureReader::new(BufReader::new(file)).map_err(|e| match e {
        IngestError::Stream(source) => IngestError::Io {
            path: path.to_owned(),
            source,
        },
        other => other,
    })?;
    reader.collect()
}

fn be16(b: &[u8], at: usize) -> Option<u16> {
    Some(u16::from_be_bytes([*b.get(at)?, *b.get(at + 1)?]))
}

fn decode_frame(link_type: u32, frame: &[u8]) -> Option<PacketRecord> {
    let (ethertype, l3) = match link_type {
        LINKTYPE_ETHERNET => {
            let mut off = 12;
            let mut et = be16(frame, off)?;
            while et == 0x8100 || et == 0x88a8 {
                off += 4;
                et = be16(frame, off)?;
            }
            (Some(et), frame.get(off + 2..)?)
        }
        LINKTYPE_NULL => (None, frame.get(4..)?),
        LINKTYPE_RAW | 12 | LINKTYPE_IPV4 | LINKTYPE_IPV6 => (None, frame),
        LINKTYPE_LINUX_SLL => (Some(be16(frame, 14)?), frame.get(16..)?),
        LINKTYPE_LINUX_SLL2 => (Some(be16(frame, 0)?), frame.get(20..)?),
        _ => return None,
    };
    let version = l3.first()? >> 4;
    match (ethertype, version) {
        (Some(0x0800) | None, 4) => decode_ipv4(l3),
        (Some(0x86dd) | None, 6) => decode_ipv6(l3),
        _ => None,
    }
}

fn decode_ipv4(ip: &[u8]) -> Option<PacketRecord> {
    let ihl = ((ip.first()? & 0x0f) as usize) * 4;
    if ihl < 20 {
        return None;
    }
    let total_len = be16(ip, 2)? as usize;
    let frag = be16(ip, 6)? & 0x1fff;
    if frag != 0 {
        debug!("skipping non-initial IPv4 fragment");
        return None;
    }
    let proto = *ip.get(9)?;
    let src = Ipv4Addr::new(ip[12], ip[13], ip[14], *ip.get(15)?);
    let dst = Ipv4Addr::new(*ip.get(16)?, ip[17], ip[18], *ip.get(19)?);
    let l4_len = total_len.checked_sub(ihl)?;
    decode_transport(proto, src.into(), dst.into(), ihl, l4_len, ip.get(ihl..)?)
}

fn decode_ipv6(ip: &[u8]) -> Option<PacketRecord> {
    let payload_len = be16(ip, 4)? as usize;
    let mut next = *ip.get(6)?;
    let src: [u8; 16] = ip.get(8..24)?.try_into().ok()?;
    let dst: [u8; 16] = ip.get(24..40)?.try_into().ok()?;
    let mut off = 40;
    loop {
        match next {
            0 | 43 | 60 => {
                next = *ip.get(off)?;
                off += (*ip.get(off + 1)? as usize + 1) * 8;
            }
            44 => {
                let frag = be16(ip, off + 2)? >> 3;
                if frag != 0 {
                    return None;
                }
                next = *ip.get(off)?;
                off += 8;
            }
            51 => {
                next = *ip.get(off)?;
                off += (*ip.get(off + 1)? as usize + 2) * 4;
            }
            _ => break,
        }
    }
    let l4_len = (40 + payload_len).checked_sub(off)?;
    decode_transport(
        next,
        Ipv6Addr::from(src).into(),
        Ipv6Addr::from(dst).into(),
        off,
        l4_len,
        ip.get(off..)?,
    )
}

fn decode_transport(
    proto: u8,
    src: IpAddr,
    dst: IpAddr,
    ip_hdr_len: usize,
    l4_len: usize,
    l4: &[u8],
) -> Option<PacketRecord> {
    match proto {
        PROTO_TCP => {
            let data_off = ((l4.get(12)? >> 4) as usize) * 4;
            if data_off < 20 {
                return None;
            }
            let payload_len = l4_len.saturating_sub(data_off);
            let payload = l4.get(data_off..).unwrap_or(&[]);
            let sni = if payload.first() == Some(&22) {
                tls::parse_sni(payload)
            } else {
                None
            };
            Some(PacketRecord {
                timestamp: 0.0,
                src: Endpoint::new(src, be16(l4, 0)?),
                dst: Endpoint::new(dst, be16(l4, 2)?),
                transport: Transport::Tcp,
                payload_len: payload_len as u32,
                header_len: (ip_hdr_len + data_off) as u32,
                tcp_window: be16(l4, 14)? as u32,
                tcp_flags: TcpFlags::from_bits_truncate(*l4.get(13)?),
                sni,
            })
        }
        PROTO_UDP => {
            let udp_len = be16(l4, 4)? as usize;
            let payload_len = udp_len.min(l4_len).saturating_sub(8);
            Some(PacketRecord {
                timestamp: 0.0,
                src: Endpoint::new(src, be16(l4, 0)?),
                dst: Endpoint::new(dst, be16(l4, 2)?),
                transport: Transport::Udp,
                payload_len: payload_len as u32,
                header_len: (ip_hdr_len + 8) as u32,
                tcp_window: 0,
                tcp_flags: TcpFlags::empty(),
                sni: None,
            })
        }
        _ => None,
    }
}

/// Writes little-endian, microsecond-resolution pcap files.
pub struct CaptureWriter<W: Write> {
    inner: W,
}

impl CaptureWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, link_type: u32) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| IngestError::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(CaptureWriter::new(BufWriter::new(file), link_type)?)
    }
}

impl<W: Write> CaptureWriter<W> {
    pub fn new(mut inner: W, link_type: u32) -> io::Result<Self> {
        inner.write_all(&MAGIC_MICROS.to_le_bytes())?;
        inner.write_all(&2u16.to_le_bytes())?;
        inner.write_all(&4u16.to_le_bytes())?;
        inner.write_all(&0i32.to_le_bytes())?;
        inner.write_all(&0u32.to_le_bytes())?;
        inner.write_all(&65535u32.to_le_bytes())?;
        inner.write_all(&link_type.to_le_bytes())?;
        Ok(CaptureWriter { inner })
    }

    /// Appends one frame captured at `micros` microseconds since the epoch.
    pub fn write_frame(&mut self, micros: u64, frame: &[u8]) -> io::Result<()> {
        let sec = (micros / 1_000_000) as u32;
        let usec = (micros % 1_000_000) as u32;
        self.inner.write_all(&sec.to_le_bytes())?;
        self.inner.write_all(&usec.to_le_bytes())?;
        self.inner.write_all(&(frame.len() as u32).to_le_bytes())?;
        self.inner.write_all(&(frame.len() as u32).to_le_bytes())?;
        self.inner.write_all(frame)
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Builds an Ethernet frame for `rec`. `payload` supplies the leading
/// payload bytes (for example a ClientHello); the rest is zero-filled up to
/// `rec.payload_len`. TCP options pad the header towards `rec.header_len`
/// when it is a valid TCP header size.
pub fn build_ethernet_frame(rec: &PacketRecord, payload: &[u8]) -> Vec<u8> {
    let payload_len = rec.payload_len as usize;
    let mut body = vec![0u8; payload_len.max(payload.len())];
    body[..payload.len()].copy_from_slice(payload);

    let (ip_hdr_len, ethertype) = match rec.src.addr {
        IpAddr::V4(_) => (20usize, 0x0800u16),
        IpAddr::V6(_) => (40usize, 0x86ddu16),
    };
    let l4 = match rec.transport {
        Transport::Tcp => {
            let wanted = (rec.header_len as usize).saturating_sub(ip_hdr_len);
            let tcp_len = if (20..=60).contains(&wanted) && wanted % 4 == 0 {
                wanted
            } else {
                20
            };
            let mut h = vec![0u8; tcp_len];
            h[0..2].copy_from_slice(&rec.src.port.to_be_bytes());
            h[2..4].copy_from_slice(&rec.dst.port.to_be_bytes());
            h[12] = ((tcp_len / 4) as u8) << 4;
            h[13] = rec.tcp_flags.bits();
            h[14..16].copy_from_slice(&(rec.tcp_window.min(u16::MAX as u32) as u16).to_be_bytes());
            // NOP options keep the padding well-formed
            for b in &mut h[20..] {
                *b = 1;
            }
            h
        }
        Transport::Udp => {
            let mut h = vec![0u8; 8];
            h[0..2].copy_from_slice(&rec.src.port.to_be_bytes());
            h[2..4].copy_from_slice(&rec.dst.port.to_be_bytes());
            h[4..6].copy_from_slice(&((8 + body.len()) as u16).to_be_bytes());
            h
        }
    };
    let proto = match rec.transport {
        Transport::Tcp => PROTO_TCP,
        Transport::Udp => PROTO_UDP,
    };

    let mut frame = Vec::with_capacity(14 + ip_hdr_len + l4.len() + body.len());
    frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02, 0x02, 0, 0, 0, 0, 0x01]);
    frame.extend_from_slice(&ethertype.to_be_bytes());
    match (rec.src.addr, rec.dst.addr) {
        (IpAddr::V4(s), IpAddr::V4(d)) => {
            let total = (20 + l4.len() + body.len()) as u16;
            let mut ip = [0u8; 20];
            ip[0] = 0x45;
            ip[2..4].copy_from_slice(&total.to_be_bytes());
            ip[8] = 64;
            ip[9] = proto;
            ip[12..16].copy_from_slice(&s.octets());
            ip[16..20].copy_from_slice(&d.octets());
            frame.extend_from_slice(&ip);
        }
        (s, d) => {
            let to_v6 = |a: IpAddr| match a {
                IpAddr::V4(v4) => v4.to_ipv6_mapped(),
                IpAddr::V6(v6) => v6,
            };
            let mut ip = [0u8; 40];
            ip[0] = 0x60;
            ip[4..6].copy_from_slice(&((l4.len() + body.len()) as u16).to_be_bytes());
            ip[6] = proto;
            ip[7] = 64;
            ip[8..24].copy_from_slice(&to_v6(s).octets());
            ip[24..40].copy_from_slice(&to_v6(d).octets());
            frame.extend_from_slice(&ip);
        }
    }
    frame.extend_from_slice(&l4);
    frame.extend_from_slice(&body);
    frame
}

/// Minimal ARP request frame, for fixtures exercising non-IP skipping.
pub fn build_arp_frame() -> Vec<u8> {
    let mut frame = vec![0xff; 6];
    frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01]);
    frame.extend_from_slice(&0x0806u16.to_be_bytes());
    frame.extend_from_slice(&[0, 1, 8, 0, 6, 4, 0, 1]);
    frame.extend_from_slice(&[0u8; 20]);
    frame
}
