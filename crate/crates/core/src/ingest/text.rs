//! Line-oriented text traces:
//!
//! ```text
//! timestamp,src_addr,src_port,dst_addr,dst_port,proto,payload_len,header_len,tcp_window,tcp_flags,sni
//! ```
//!
//! `proto` is `TCP` or `UDP`, `tcp_flags` a string over `FSPARUEC`, and an
//! empty field means absent. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::net::IpAddr;
use std::path::Path;

use super::{check_monotone, Endpoint, IngestError, PacketRecord, TcpFlags, Transport};

const FIELDS: usize = 11;

pub fn read_text_trace(path: impl AsRef<Path>) -> Result<Vec<PacketRecord>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_text_trace(BufReader::new(file))
}

pub fn parse_text_trace<R: BufRead>(reader: R) -> Result<Vec<PacketRecord>, IngestError> {
    let mut out = Vec::new();
    let mut last = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rec = parse_line(trimmed).map_err(|msg| IngestError::Line { line: lineno, msg })?;
        if let Err(IngestError::OutOfOrder { previous, .. }) =
            check_monotone(out.len(), last, rec.timestamp)
        {
            return Err(IngestError::Line {
                line: lineno,
                msg: format!("timestamp {} precedes {}", rec.timestamp, previous),
            });
        }
        last = Some(rec.timestamp);
        out.push(rec);
    }
    Ok(out)
}

fn parse_line(line: &str) -> Result<PacketRecord, String> {
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.len() != FIELDS {
        return Err(format!("expected {FIELDS} fields, found {}", f.len()));
    }
    let timestamp: f64 = f[0]
        .parse()
        .map_err(|_| format!("bad timestamp {:?}", f[0]))?;
    if !timestamp.is_finite() || timestamp < 0.0 {
        return Err(format!("timestamp must be finite and >= 0, got {}", f[0]));
    }
    let transport = match f[5].to_ascii_uppercase().as_str() {
        "TCP" => Transport::Tcp,
        "UDP" => Transport::Udp,
        other => return Err(format!("unknown transport {other:?}")),
    };
    let payload_len = count(f[6], "payload_len", false)?;
    let header_len = count(f[7], "header_len", true)?;
    let tcp_window = count(f[8], "tcp_window", true)?;
    let tcp_flags =
        TcpFlags::from_letters(f[9]).ok_or_else(|| format!("bad tcp_flags {:?}", f[9]))?;
    if transport == Transport::Udp && (tcp_window != 0 || !tcp_flags.is_empty()) {
        return Err("UDP record carries TCP window or flags".into());
    }
    Ok(PacketRecord {
        timestamp,
        src: endpoint(f[1], f[2])?,
        dst: endpoint(f[3], f[4])?,
        transport,
        payload_len,
        header_len,
        tcp_window,
        tcp_flags,
        sni: (!f[10].is_empty()).then(|| f[10].to_owned()),
    })
}

fn endpoint(addr: &str, port: &str) -> Result<Endpoint, String> {
    let addr: IpAddr = addr
        .trim_start_matches('[')
        .trim_end_matches(']')
        .parse()
        .map_err(|_| format!("bad address {addr:?}"))?;
    let port: u16 = port.parse().map_err(|_| format!("bad port {port:?}"))?;
    Ok(Endpoint { addr, port })
}

fn count(field: &str, name: &str, optional: bool) -> Result<u32, String> {
    if field.is_empty() {
        return if optional {
            Ok(0)
        } else {
            Err(format!("{name} is required"))
        };
    }
    let v: i64 = field
        .parse()
        .map_err(|_| format!("bad {name} {field:?}"))?;
    if v < 0 {
        return Err(format!("{name} must be >= 0, got {v}"));
    }
    u32::try_from(v).map_err(|_| format!("{name} out of range: {v}"))
}

/// Writes records in the text-trace format. Timestamps use the shortest
/// representation that parses back to the same value.
pub fn write_text_trace<W: Write>(mut w: W, records: &[PacketRecord]) -> Result<(), IngestError> {
    for r in records {
        if let Some(sni) = &r.sni {
            if sni.contains(',') || sni.contains('\n') || sni.trim() != sni {
                return Err(IngestError::Unwritable(format!("sni {sni:?}")));
            }
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.timestamp,
            r.src.addr,
            r.src.port,
            r.dst.addr,
            r.dst.port,
            r.transport,
            r.payload_len,
            r.header_len,
            r.tcp_window,
            r.tcp_flags.to_letters(),
            r.sni.as_deref().unwrap_or(""),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::net::{Ipv4Addr, Ipv6Addr};

    const SAMPLE: &str = "\
# capture of one session
0,10.0.0.2,51000,10.0.0.9,443,TCP,0,40,64240,S,
0.012,10.0.0.9,443,10.0.0.2,51000,TCP,0,40,65535,SA,
0.5,10.0.0.2,51000,10.0.0.9,443,tcp,517,52,502,PA,r3.googlevideos.com
";

    #[test]
    fn reads_records_in_order() {
        let recs = parse_text_trace(SAMPLE.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].tcp_flags, TcpFlags::SYN | TcpFlags::ACK);
        assert_eq!(recs[2].sni.as_deref(), Some("r3.googlevideos.com"));
        assert_eq!(recs[2].payload_len, 517);
        assert!(recs[0].sni.is_none());
    }

    #[test]
    fn negative_payload_names_line() {
        let text = "0,1.1.1.1,1,2.2.2.2,2,UDP,5,28,,,\n1,1.1.1.1,1,2.2.2.2,2,UDP,-4,28,,,\n";
        match parse_text_trace(text.as_bytes()) {
            Err(IngestError::Line { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("payload_len"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_monotone_rejected() {
        let text = "2,1.1.1.1,1,2.2.2.2,2,UDP,5,28,,,\n1,1.1.1.1,1,2.2.2.2,2,UDP,4,28,,,\n";
        assert!(matches!(
            parse_text_trace(text.as_bytes()),
            Err(IngestError::Line { line: 2, .. })
        ));
    }

    #[test]
    fn malformed_lines() {
        for bad in [
            "0,1.1.1.1,1,2.2.2.2,2,UDP,5,28,,",
            "0,1.1.1.1,1,2.2.2.2,2,ICMP,5,28,,,",
            "0,1.1.1.1,99999,2.2.2.2,2,UDP,5,28,,,",
            "0,1.1.1,1,2.2.2.2,2,UDP,5,28,,,",
            "0,1.1.1.1,1,2.2.2.2,2,UDP,5,28,10,,",
            "0,1.1.1.1,1,2.2.2.2,2,TCP,5,28,10,Z,",
            "-1,1.1.1.1,1,2.2.2.2,2,UDP,5,28,,,",
        ] {
            assert!(parse_text_trace(bad.as_bytes()).is_err(), "{bad}");
        }
    }

    fn arb_record() -> impl Strategy<Value = PacketRecord> {
        (
            any::<bool>(),
            any::<[u8; 4]>(),
            any::<[u16; 8]>(),
            any::<u16>(),
            any::<u16>(),
            any::<bool>(),
            0u32..100_000,
            0u32..120,
            any::<u16>(),
            any::<u8>(),
            proptest::option::of("[a-z0-9]{1,10}(\\.[a-z]{2,5}){1,2}"),
        )
            .prop_map(|(v6, a4, a6, sp, dp, udp, pay, hdr, win, flags, sni)| {
                let (src, dst): (IpAddr, IpAddr) = if v6 {
                    (Ipv6Addr::from(a6).into(), Ipv6Addr::LOCALHOST.into())
                } else {
                    (Ipv4Addr::from(a4).into(), Ipv4Addr::new(10, 1, 2, 3).into())
                };
                PacketRecord {
                    timestamp: 0.0,
                    src: Endpoint::new(src, sp),
                    dst: Endpoint::new(dst, dp),
                    transport: if udp { Transport::Udp } else { Transport::Tcp },
                    payload_len: pay,
                    header_len: hdr,
                    tcp_window: if udp { 0 } else { win as u32 },
                    tcp_flags: if udp {
                        TcpFlags::empty()
                    } else {
                        TcpFlags::from_bits_truncate(flags)
                    },
                    sni,
                }
            })
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(
            mut recs in proptest::collection::vec(arb_record(), 0..40),
            gaps in proptest::collection::vec(0.0f64..3.0, 40),
        ) {
            let mut t = 0.0;
            for (r, g) in recs.iter_mut().zip(&gaps) {
                t += g;
                r.timestamp = t;
            }
            let mut buf = Vec::new();
            write_text_trace(&mut buf, &recs).unwrap();
            let back = parse_text_trace(buf.as_slice()).unwrap();
            prop_assert_eq!(back, recs);
        }
    }
}
