//! Model file layout.
//!
//! ```text
//! "MNR1" version:u8
//! section* where section = tag:u8 name_len:u16 name element_count:u64 payload
//! ```
//!
//! All integers are little-endian. Tags: 0 = `f32` tensor, 1 = UTF-8 blob
//! (count = bytes), 2 = `u32` index list.

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MNR1";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    F32(Vec<f32>),
    Text(String),
    Indices(Vec<u32>),
}

impl Payload {
    fn tag(&self) -> u8 {
        match self {
            Payload::F32(_) => 0,
            Payload::Text(_) => 1,
            Payload::Indices(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub payload: Payload,
}

pub fn encode(sections: &[Section]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for s in sections {
        let name = s.name.as_bytes();
        let name_len = u16::try_from(name.len()).expect("section name too long");
        out.push(s.payload.tag());
        out.extend_from_slice(&name_len.to_le_bytes());
        out.extend_from_slice(name);
        match &s.payload {
            Payload::F32(v) => {
                out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Payload::Text(t) => {
                out.extend_from_slice(&(t.len() as u64).to_le_bytes());
                out.extend_from_slice(t.as_bytes());
            }
            Payload::Indices(v) => {
                out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// `count` elements of `width` bytes, checked against the remaining
    /// length before allocating.
    fn elements(&mut self, count: u64, width: usize) -> Result<&'a [u8]> {
        let n = usize::try_from(count)
            .ok()
            .and_then(|c| c.checked_mul(width))
            .ok_or(Error::Truncated)?;
        self.take(n)
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Section>> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let mut sections = Vec::new();
    while r.pos < bytes.len() {
        let tag = r.u8()?;
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Malformed("section name is not UTF-8".into()))?
            .to_string();
        let count = r.u64()?;
        let payload = match tag {
            0 => Payload::F32(
                r.elements(count, 4)?
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect(),
            ),
            1 => Payload::Text(
                std::str::from_utf8(r.elements(count, 1)?)
                    .map_err(|_| Error::Malformed(format!("section {name}: not UTF-8")))?
                    .to_string(),
            ),
            2 => Payload::Indices(
                r.elements(count, 4)?
                    .chunks_exact(4)
                    .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect(),
            ),
            t => return Err(Error::Malformed(format!("section {name}: unknown tag {t}"))),
        };
        sections.push(Section { name, payload });
    }
    Ok(sections)
}

/// Consumes sections in order, checking names and kinds.
pub struct SectionCursor {
    sections: std::vec::IntoIter<Section>,
    peeked: Option<Section>,
}

impl SectionCursor {
    pub fn new(sections: Vec<Section>) -> Self {
        SectionCursor {
            sections: sections.into_iter(),
            peeked: None,
        }
    }

    fn next(&mut self) -> Option<Section> {
        self.peeked.take().or_else(|| self.sections.next())
    }

    pub fn peek_name(&mut self) -> Option<&str> {
        if self.peeked.is_none() {
            self.peeked = self.sections.next();
        }
        self.peeked.as_ref().map(|s| s.name.as_str())
    }

    fn expect(&mut self, name: &str) -> Result<Payload> {
        match self.next() {
            Some(s) if s.name == name => Ok(s.payload),
            Some(s) => Err(Error::Malformed(format!("expected section {name}, found {}", s.name))),
            None => Err(Error::Malformed(format!("missing section {name}"))),
        }
    }

    pub fn text(&mut self, name: &str) -> Result<String> {
        match self.expect(name)? {
            Payload::Text(t) => Ok(t),
            _ => Err(Error::Malformed(format!("section {name}: expected text"))),
        }
    }

    pub fn f32s(&mut self, name: &str, len: usize) -> Result<Vec<f64>> {
        match self.expect(name)? {
            Payload::F32(v) if v.len() == len => Ok(v.into_iter().map(f64::from).collect()),
            Payload::F32(v) => Err(Error::Malformed(format!(
                "section {name}: {} values, expected {len}",
                v.len()
            ))),
            _ => Err(Error::Malformed(format!("section {name}: expected f32 tensor"))),
        }
    }

    pub fn indices(&mut self, name: &str) -> Result<Vec<u32>> {
        match self.expect(name)? {
            Payload::Indices(v) => Ok(v),
            _ => Err(Error::Malformed(format!("section {name}: expected index list"))),
        }
    }

    pub fn finish(mut self) -> Result<()> {
        match self.next() {
            None => Ok(()),
            Some(s) => Err(Error::Malformed(format!("unexpected section {}", s.name))),
        }
    }
}

/// Narrows to `f32`; callers round parameters beforehand so this is exact.
pub fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Section> {
        vec![
            Section { name: "a".into(), payload: Payload::Text("héllo".into()) },
            Section { name: "b".into(), payload: Payload::F32(vec![1.5, -0.25, f32::MIN_POSITIVE]) },
            Section { name: "c".into(), payload: Payload::Indices(vec![0, 7, u32::MAX]) },
        ]
    }

    #[test]
    fn round_trip() {
        assert_eq!(decode(&encode(&sample())).unwrap(), sample());
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample()[..1]);
        assert_eq!(&bytes[..5], b"MNR1\x01");
        assert_eq!(bytes[5], 1);
        assert_eq!(&bytes[6..8], &1u16.to_le_bytes());
        assert_eq!(bytes[8], b'a');
        assert_eq!(&bytes[9..17], &6u64.to_le_bytes());
    }

    #[test]
    fn named_errors() {
        assert!(matches!(decode(b""), Err(Error::BadMagic)));
        assert!(matches!(decode(b"MNR2\x01"), Err(Error::BadMagic)));
        assert!(matches!(decode(b"MNR1"), Err(Error::Truncated)));
        assert!(matches!(decode(b"MNR1\x02"), Err(Error::UnsupportedVersion(2))));
        let bytes = encode(&sample());
        let boundaries: Vec<usize> = (0..=3).map(|i| encode(&sample()[..i]).len()).collect();
        for cut in (6..bytes.len()).filter(|c| !boundaries.contains(c)) {
            assert!(matches!(decode(&bytes[..cut]), Err(Error::Truncated)), "cut {cut}");
        }
    }

    #[test]
    fn huge_count_is_truncated_not_oom() {
        let mut bytes = b"MNR1\x01\x00\x01\x00x".to_vec();
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(Error::Truncated)));
    }
}
