//! Server Name Indication extraction from TLS ClientHello records.

const HANDSHAKE: u8 = 22;
const CLIENT_HELLO: u8 = 1;
const EXT_SERVER_NAME: u16 = 0;
const NAME_TYPE_HOST: u8 = 0;

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0 }
    }

    fn u8(&mut self) -> Option<u8> {
        let v = *self.buf.get(self.pos)?;
        self.pos += 1;
        Some(v)
    }

    fn u16(&mut self) -> Option<u16> {
        let b = self.take(2)?;
        Some(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u24(&mut self) -> Option<usize> {
        let b = self.take(3)?;
        Some(((b[0] as usize) << 16) | ((b[1] as usize) << 8) | b[2] as usize)
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.buf.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn skip_vec8(&mut self) -> Option<()> {
        let n = self.u8()? as usize;
        self.take(n).map(|_| ())
    }

    fn skip_vec16(&mut self) -> Option<()> {
        let n = self.u16()? as usize;
        self.take(n).map(|_| ())
    }
}

/// Returns the host name carried in the `server_name` extension when
/// `payload` begins with a TLS handshake record holding a ClientHello.
///
/// Only the bytes present are inspected; a ClientHello split across
/// segments yields `None` when the extension lies beyond the first one.
pub fn parse_sni(payload: &[u8]) -> Option<String> {
    let mut rec = Cursor::new(payload);
    if rec.u8()? != HANDSHAKE {
        return None;
    }
    let _version = rec.u16()?;
    let _record_len = rec.u16()?;
    let body = &payload[rec.pos..];
    parse_handshake(body)
}

fn parse_handshake(body: &[u8]) -> Option<String> {
    let mut c = Cursor::new(body);
    if c.u8()? != CLIENT_HELLO {
        return None;
    }
    let _len = c.u24()?;
    let _legacy_version = c.u16()?;
    c.take(32)?; // random
    c.skip_vec8()?; // session id
    c.skip_vec16()?; // cipher suites
    c.skip_vec8()?; // compression methods
    let ext_total = c.u16()? as usize;
    let mut exts = Cursor::new(c.take(ext_total).unwrap_or(&body[c.pos..]));
    while let (Some(kind), Some(len)) = (exts.u16(), exts.u16()) {
        let data = exts.take(len as usize)?;
        if kind == EXT_SERVER_NAME {
            return parse_server_name_list(data);
        }
    }
    None
}

fn parse_server_name_list(data: &[u8]) -> Option<String> {
    let mut c = Cursor::new(data);
    let list_len = c.u16()? as usize;
    let mut list = Cursor::new(c.take(list_len)?);
    while let Some(kind) = list.u8() {
        let len = list.u16()? as usize;
        let name = list.take(len)?;
        if kind == NAME_TYPE_HOST {
            return std::str::from_utf8(name).ok().map(str::to_owned);
        }
    }
    None
}

/// Builds a minimal but well-formed TLS 1.2 ClientHello record carrying
/// `host` in its `server_name` extension. Used to synthesize captures.
pub fn build_client_hello(host: &str) -> Vec<u8> {
    let name = host.as_bytes();
    let mut sni_ext = Vec::new();
    sni_ext.extend_from_slice(&((name.len() + 3) as u16).to_be_bytes());
    sni_ext.push(NAME_TYPE_HOST);
    sni_ext.extend_from_slice(&(name.len() as u16).to_be_bytes());
    sni_ext.extend_from_slice(name);

    let mut extensions = Vec::new();
    // an unrelated extension first (supported_groups) so the scan has to walk
    extensions.extend_from_slice(&10u16.to_be_bytes());
    extensions.extend_from_slice(&4u16.to_be_bytes());
    extensions.extend_from_slice(&[0x00, 0x02, 0x00, 0x1d]);
    extensions.extend_from_slice(&EXT_SERVER_NAME.to_be_bytes());
    extensions.extend_from_slice(&(sni_ext.len() as u16).to_be_bytes());
    extensions.extend_from_slice(&sni_ext);

    let mut hello = Vec::new();
    hello.extend_from_slice(&[0x03, 0x03]);
    hello.extend_from_slice(&[0x5a; 32]);
    hello.push(0); // session id
    hello.extend_from_slice(&4u16.to_be_bytes());
    hello.extend_from_slice(&[0x13, 0x01, 0xc0, 0x2f]);
    hello.extend_from_slice(&[1, 0]); // compression: null
    hello.extend_from_slice(&(extensions.len() as u16).to_be_bytes());
    hello.extend_from_slice(&extensions);

    let mut handshake = vec![CLIENT_HELLO];
    let len = hello.len() as u32;
    handshake.extend_from_slice(&len.to_be_bytes()[1..]);
    handshake.extend_from_slice(&hello);

    let mut record = vec![HANDSHAKE, 0x03, 0x01];
    record.extend_from_slice(&(handshake.len() as u16).to_be_bytes());
    record.extend_from_slice(&handshake);
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_host() {
        let rec = build_client_hello("r3.googlevideos.com");
        assert_eq!(parse_sni(&rec).as_deref(), Some("r3.googlevideos.com"));
    }

    #[test]
    fn rejects_non_handshake() {
        let mut rec = build_client_hello("a.example");
        rec[0] = 23;
        assert_eq!(parse_sni(&rec), None);
        assert_eq!(parse_sni(&[]), None);
        assert_eq!(parse_sni(b"GET / HTTP/1.1\r\n"), None);
    }

    #[test]
    fn truncation_never_panics() {
        let rec = build_client_hello("video.example.org");
        for cut in 0..rec.len() {
            let _ = parse_sni(&rec[..cut]);
        }
        assert_eq!(parse_sni(&rec[..rec.len() - 3]), None);
    }

    #[test]
    fn server_hello_is_ignored() {
        let mut rec = build_client_hello("a.example");
        rec[5] = 2;
        assert_eq!(parse_sni(&rec), None);
    }
}
