//! Motorola S-record decoding and encoding.

use super::{parse_hex_bytes, IngestError, Segment, SegmentList};

/// Decode S-record text. S5/S6 count records are accepted and ignored.
pub fn decode_srecord(text: &str) -> Result<SegmentList, IngestError> {
    let mut out = SegmentList::default();
    let mut seen_any = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        seen_any = true;
        let mut chars = trimmed.chars();
        if chars.next() != Some('S') {
            return Err(IngestError::TruncatedRecord { line });
        }
        let kind = chars
            .next()
            .and_then(|c| c.to_digit(10))
            .ok_or(IngestError::BadRecordType { line })?;
        let addr_len = match kind {
            0 | 1 | 5 | 9 => 2,
            2 | 6 | 8 => 3,
            3 | 7 => 4,
            _ => return Err(IngestError::BadRecordType { line }),
        };
        let bytes = parse_hex_bytes(&trimmed[2..], line)?;
        let count = *bytes.first().ok_or(IngestError::TruncatedRecord { line })? as usize;
        if bytes.len() != count + 1 || count < addr_len + 1 {
            return Err(IngestError::TruncatedRecord { line });
        }
        let sum = bytes[..bytes.len() - 1]
            .iter()
            .fold(0u8, |acc, &b| acc.wrapping_add(b));
        if !sum != bytes[bytes.len() - 1] {
            return Err(IngestError::BadChecksum { line });
        }
        let addr = bytes[1..1 + addr_len]
            .iter()
            .fold(0u32, |acc, &b| (acc << 8) | b as u32);
        let data = &bytes[1 + addr_len..bytes.len() - 1];
        match kind {
            0 => {
                let text: String = data
                    .iter()
                    .filter(|&&b| b != 0)
                    .map(|&b| b as char)
                    .collect();
                out.header = Some(text);
            }
            1..=3 => {
                if addr as u64 + data.len() as u64 > 1u64 << 32 {
                    return Err(IngestError::AddressOverflow { line });
                }
                out.segments.push(Segment::new(addr, data.to_vec()));
            }
            5 | 6 => {}
            // A termination record is mandatory, so 0 is what writers emit
            // when there is no entry point.
            _ => out.start_address = (addr != 0).then_some(addr),
        }
    }
    if !seen_any {
        return Err(IngestError::EmptyInput);
    }
    out.normalize();
    Ok(out)
}

fn push_record(out: &mut String, kind: u8, addr: u32, addr_len: usize, data: &[u8]) {
    let mut bytes = Vec::with_capacity(data.len() + addr_len + 2);
    bytes.push((addr_len + data.len() + 1) as u8);
    bytes.extend_from_slice(&addr.to_be_bytes()[4 - addr_len..]);
    bytes.extend_from_slice(data);
    let sum = bytes.iter().fold(0u8, |acc, &b| acc.wrapping_add(b));
    bytes.push(!sum);
    out.push('S');
    out.push(char::from(b'0' + kind));
    for b in bytes {
        out.push_str(&format!("{b:02X}"));
    }
    out.push('\n');
}

/// Encode segments with the narrowest data record type that fits the
/// highest address, 16 data bytes per record.
pub fn encode_srecord(segs: &SegmentList) -> String {
    let max_end = segs.segments.iter().map(|s| s.end()).max().unwrap_or(0);
    let max_addr = max_end.saturating_sub(1).max(segs.start_address.unwrap_or(0) as u64);
    let (data_kind, term_kind, addr_len) = if max_addr <= 0xFFFF {
        (1, 9, 2)
    } else if max_addr <= 0xFF_FFFF {
        (2, 8, 3)
    } else {
        (3, 7, 4)
    };
    let mut out = String::new();
    if let Some(h) = &segs.header {
        push_record(&mut out, 0, 0, 2, h.as_bytes());
    }
    let mut records = 0u32;
    for seg in &segs.segments {
        for (i, chunk) in seg.data.chunks(16).enumerate() {
            push_record(&mut out, data_kind, seg.start + (i * 16) as u32, addr_len, chunk);
            records += 1;
        }
    }
    if records <= 0xFFFF {
        push_record(&mut out, 5, records, 2, &[]);
    }
    push_record(&mut out, term_kind, segs.start_address.unwrap_or(0), addr_len, &[]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s1_data_record() {
        // count covers address + data + checksum = 6;
        // 0xFF - ((06+00+00+AA+BB+CC) mod 256) = 0xC8
        let segs = decode_srecord("S1060000AABBCCC8\n").unwrap();
        assert_eq!(segs.segments, vec![Segment::new(0, vec![0xAA, 0xBB, 0xCC])]);
        // a count of 5 leaves the declared length one byte short
        assert_eq!(
            decode_srecord("S1050000AABBCCC9\n"),
            Err(IngestError::TruncatedRecord { line: 1 })
        );
    }

    #[test]
    fn s9_records_start_only() {
        let segs = decode_srecord("S9030000FC\n").unwrap();
        assert!(segs.segments.is_empty());
        assert_eq!(segs.start_address, None);
        let segs = decode_srecord("S9030101FA\n").unwrap();
        assert_eq!(segs.start_address, Some(0x101));
    }

    #[test]
    fn count_record_is_ignored() {
        let segs = decode_srecord("S1060000AABBCCC8\nS5030001FB\n").unwrap();
        assert_eq!(segs.segments.len(), 1);
    }

    #[test]
    fn header_and_s3() {
        let mut segs = SegmentList::from_segments(vec![Segment::new(0x0800_0000, vec![1, 2, 3])]);
        segs.header = Some("fw".into());
        segs.start_address = Some(0x0800_0001);
        let text = encode_srecord(&segs);
        assert!(text.starts_with("S0"));
        assert!(text.contains("\nS3"));
        assert!(text.contains("\nS7"));
        assert_eq!(decode_srecord(&text).unwrap(), segs);
    }

    #[test]
    fn rejects_bad_checksum_and_type() {
        assert_eq!(
            decode_srecord("S1060000AABBCCC9\n"),
            Err(IngestError::BadChecksum { line: 1 })
        );
        assert_eq!(
            decode_srecord("S4060000AABBCCC8\n"),
            Err(IngestError::BadRecordType { line: 1 })
        );
        assert_eq!(
            decode_srecord("S1050000AABB"),
            Err(IngestError::TruncatedRecord { line: 1 })
        );
    }
}
