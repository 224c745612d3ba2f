//! Intel HEX (I32HEX) decoding and encoding.

use super::{parse_hex_bytes, IngestError, Segment, SegmentList};

const DATA: u8 = 0x00;
const EOF: u8 = 0x01;
const EXT_SEGMENT: u8 = 0x02;
const START_SEGMENT: u8 = 0x03;
const EXT_LINEAR: u8 = 0x04;
const START_LINEAR: u8 = 0x05;

struct Record {
    addr: u16,
    kind: u8,
    data: Vec<u8>,
}

fn parse_record(text: &str, line: usize) -> Result<Record, IngestError> {
    let body = text
        .strip_prefix(':')
        .ok_or(IngestError::TruncatedRecord { line })?;
    if body.len() < 10 {
        return Err(IngestError::TruncatedRecord { line });
    }
    let bytes = parse_hex_bytes(body, line)?;
    let count = bytes[0] as usize;
    if bytes.len() != count + 5 {
        return Err(IngestError::TruncatedRecord { line });
    }
    let sum = bytes.iter().fold(0u8, |acc, &b| acc.wrapping_add(b));
    if sum != 0 {
        return Err(IngestError::BadChecksum { line });
    }
    Ok(Record {
        addr: u16::from_be_bytes([bytes[1], bytes[2]]),
        kind: bytes[3],
        data: bytes[4..4 + count].to_vec(),
    })
}

/// Decode Intel HEX text. Blank lines are skipped and anything after the EOF
/// record is ignored; a missing EOF record is tolerated.
pub fn decode_intel_hex(text: &str) -> Result<SegmentList, IngestError> {
    let mut out = SegmentList::default();
    let mut upper: u32 = 0;
    let mut seen_any = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        seen_any = true;
        let rec = parse_record(trimmed, line)?;
        let want_len = |n: usize| {
            if rec.data.len() == n {
                Ok(())
            } else {
                Err(IngestError::TruncatedRecord { line })
            }
        };
        match rec.kind {
            DATA => {
                let start = upper as u64 + rec.addr as u64;
                if start + rec.data.len() as u64 > 1u64 << 32 {
                    return Err(IngestError::AddressOverflow { line });
                }
                out.segments.push(Segment::new(start as u32, rec.data));
            }
            EOF => break,
            EXT_SEGMENT => {
                want_len(2)?;
                upper = (u16::from_be_bytes([rec.data[0], rec.data[1]]) as u32) << 4;
            }
            EXT_LINEAR => {
                want_len(2)?;
                upper = (u16::from_be_bytes([rec.data[0], rec.data[1]]) as u32) << 16;
            }
            START_SEGMENT => {
                want_len(4)?;
                let cs = u16::from_be_bytes([rec.data[0], rec.data[1]]) as u32;
                let ip = u16::from_be_bytes([rec.data[2], rec.data[3]]) as u32;
                out.start_address = Some((cs << 4).wrapping_add(ip));
            }
            START_LINEAR => {
                want_len(4)?;
                out.start_address = Some(u32::from_be_bytes([
                    rec.data[0],
                    rec.data[1],
                    rec.data[2],
                    rec.data[3],
                ]));
            }
            _ => return Err(IngestError::BadRecordType { line }),
        }
    }
    if !seen_any {
        return Err(IngestError::EmptyInput);
    }
    out.normalize();
    Ok(out)
}

fn push_record(out: &mut String, addr: u16, kind: u8, data: &[u8]) {
    let mut bytes = Vec::with_capacity(data.len() + 5);
    bytes.push(data.len() as u8);
    bytes.extend_from_slice(&addr.to_be_bytes());
    bytes.push(kind);
    bytes.extend_from_slice(data);
    let sum = bytes.iter().fold(0u8, |acc, &b| acc.wrapping_add(b));
    bytes.push(sum.wrapping_neg());
    out.push(':');
    for b in bytes {
        out.push_str(&format!("{b:02X}"));
    }
    out.push('\n');
}

/// Encode segments as Intel HEX with 16-byte data records. Records never
/// cross a 64 KiB boundary so every one is addressable under its type-04
/// prefix.
pub fn encode_intel_hex(segs: &SegmentList) -> String {
    let mut out = String::new();
    let mut upper: Option<u16> = None;
    for seg in &segs.segments {
        let mut addr = seg.start as u64;
        let mut rest = seg.data.as_slice();
        while !rest.is_empty() {
            let hi = (addr >> 16) as u16;
            if upper != Some(hi) {
                push_record(&mut out, 0, EXT_LINEAR, &hi.to_be_bytes());
                upper = Some(hi);
            }
            let to_boundary = 0x1_0000 - (addr & 0xFFFF);
            let n = rest.len().min(16).min(to_boundary as usize);
            push_record(&mut out, addr as u16, DATA, &rest[..n]);
            rest = &rest[n..];
            addr += n as u64;
        }
    }
    if let Some(sa) = segs.start_address {
        push_record(&mut out, 0, START_LINEAR, &sa.to_be_bytes());
    }
    push_record(&mut out, 0, EOF, &[]);
    out
}
