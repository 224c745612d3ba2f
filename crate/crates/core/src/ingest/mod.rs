//! Firmware container decoding.
//!
//! Intel HEX and Motorola S-record files decode to a [`SegmentList`]; segments
//! are merged into a contiguous [`FirmwareImage`] with gaps filled by the
//! erased-flash byte. Raw binaries wrap directly. Segments that fall inside a
//! configured detached window (for example a Nordic UICR page at
//! `0x10001000`) are kept beside the image instead of being merged, so a
//! multi-part package does not produce a 256 MiB gap.

mod format;
pub mod ihex;
mod manifest;
pub mod srec;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{ContainerFormat, FormatRegistry, IntelHexFormat, RawFormat, SRecordFormat};
pub use manifest::{
    load_entry, load_path, walk_corpus, walk_corpus_with, CorpusItem, CorpusManifest, ManifestEntry,
    ManifestError,
};

/// Default cap on a fill gap between merged segments.
pub const DEFAULT_GAP_CAP: u64 = 16 * 1024 * 1024;

/// Erased-flash fill byte.
pub const DEFAULT_FILL: u8 = 0xFF;

/// Nordic UICR page, shipped as a high segment in application HEX files.
pub const NORDIC_UICR_WINDOW: (u32, u32) = (0x1000_1000, 0x1000_1FFF);

pub const META_START_ADDRESS: &str = "start_address";
pub const META_HEADER: &str = "header";
pub const META_PROFILE: &str = "vendor_profile";
pub const META_DEVICE: &str = "device_id";
pub const META_DETACHED: &str = "detached_segments";
/// Source path of a file-backed image.
pub const META_IMAGE_ID: &str = "image_id";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: bad checksum")]
    BadChecksum { line: usize },
    #[error("line {line}: unsupported record type")]
    BadRecordType { line: usize },
    #[error("line {line}: truncated or malformed record")]
    TruncatedRecord { line: usize },
    #[error("line {line}: invalid hex digit")]
    BadHexDigit { line: usize },
    #[error("line {line}: record data wraps past the 32-bit address space")]
    AddressOverflow { line: usize },
    #[error("segments overlap at {at:#010x}")]
    OverlappingSegments { at: u32 },
    #[error("gap of {gap:#x} bytes after {after:#010x} exceeds cap of {cap:#x}")]
    GapTooLarge { after: u32, gap: u64, cap: u64 },
    #[error("no segment data outside detached windows")]
    NoData,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown container format `{0}`")]
    UnknownFormat(String),
}

/// Contiguous bytes at a physical address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "crate::hexnum")]
    pub start: u32,
    pub data: Vec<u8>,
}

impl Segment {
    pub fn new(start: u32, data: Vec<u8>) -> Self {
        Segment { start, data }
    }

    /// One past the last covered address.
    pub fn end(&self) -> u64 {
        self.start as u64 + self.data.len() as u64
    }

    pub fn contains(&self, addr: u32) -> bool {
        (self.start as u64..self.end()).contains(&(addr as u64))
    }

    /// Little-endian word at `addr`, if fully covered.
    pub fn read_u32(&self, addr: u32) -> Option<u32> {
        let off = addr.checked_sub(self.start)? as usize;
        let b = self.data.get(off..off.checked_add(4)?)?;
        Some(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Decoder output: sorted data segments plus non-data records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SegmentList {
    pub segments: Vec<Segment>,
    /// Start/entry address record (HEX type 03/05, S7/S8/S9).
    pub start_address: Option<u32>,
    /// S0 header text.
    pub header: Option<String>,
}

impl SegmentList {
    pub fn from_segments(segments: Vec<Segment>) -> Self {
        SegmentList {
            segments,
            ..Default::default()
        }
    }

    /// Sort by start and coalesce exactly adjacent segments.
    pub(crate) fn normalize(&mut self) {
        self.segments.retain(|s| !s.data.is_empty());
        self.segments.sort_by_key(|s| s.start);
        let mut out: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for seg in self.segments.drain(..) {
            match out.last_mut() {
                Some(prev) if prev.end() == seg.start as u64 => prev.data.extend(seg.data),
                _ => out.push(seg),
            }
        }
        self.segments = out;
    }

    pub fn total_len(&self) -> usize {
        self.segments.iter().map(|s| s.data.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    Raw,
    IntelHex,
    Srecord,
}

impl SourceFormat {
    pub fn name(self) -> &'static str {
        match self {
            SourceFormat::Raw => "raw",
            SourceFormat::IntelHex => "intel_hex",
            SourceFormat::Srecord => "srecord",
        }
    }
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A normalized firmware image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmwareImage {
    /// Load address of `bytes[0]`; unset until inferred or declared.
    pub base: Option<u32>,
    pub bytes: Vec<u8>,
    pub fill: u8,
    pub source_format: SourceFormat,
    pub metadata: BTreeMap<String, String>,
    /// Segments kept outside the contiguous image (configuration pages).
    pub detached: Vec<Segment>,
}

impl FirmwareImage {
    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn with_base(mut self, base: u32) -> Self {
        self.base = Some(base);
        self
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    /// Little-endian word at absolute `addr`, searching the contiguous image
    /// (when the base is known) and then any detached segments.
    pub fn read_u32(&self, addr: u32) -> Option<u32> {
        if let Some(base) = self.base {
            if let Some(off) = addr.checked_sub(base) {
                let off = off as usize;
                if let Some(b) = self.bytes.get(off..off.saturating_add(4)) {
                    if b.len() == 4 {
                        return Some(u32::from_le_bytes([b[0], b[1], b[2], b[3]]));
                    }
                }
            }
        }
        self.detached.iter().find_map(|s| s.read_u32(addr))
    }

    /// Whether any byte of the image or its detached segments covers `addr`.
    pub fn covers(&self, addr: u32) -> bool {
        let in_main = self.base.is_some_and(|b| {
            addr.checked_sub(b).is_some_and(|off| (off as usize) < self.bytes.len())
        });
        in_main || self.detached.iter().any(|s| s.contains(addr))
    }
}

/// Knobs for turning segments into an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    pub fill: u8,
    pub gap_cap: u64,
    /// Inclusive address windows whose segments are kept detached.
    pub detached_windows: Vec<(u32, u32)>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            fill: DEFAULT_FILL,
            gap_cap: DEFAULT_GAP_CAP,
            detached_windows: vec![NORDIC_UICR_WINDOW],
        }
    }
}

/// Wrap a raw binary.
pub fn load_raw(bytes: &[u8], base: Option<u32>) -> Result<FirmwareImage, IngestError> {
    if bytes.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(FirmwareImage {
        base,
        bytes: bytes.to_vec(),
        fill: DEFAULT_FILL,
        source_format: SourceFormat::Raw,
        metadata: BTreeMap::new(),
        detached: Vec::new(),
    })
}

/// Merge segments into one contiguous image using the default gap cap.
pub fn merge_segments(segs: &SegmentList, fill: u8) -> Result<FirmwareImage, IngestError> {
    merge_segments_capped(segs, fill, DEFAULT_GAP_CAP)
}

pub fn merge_segments_capped(
    segs: &SegmentList,
    fill: u8,
    gap_cap: u64,
) -> Result<FirmwareImage, IngestError> {
    let mut sorted: Vec<&Segment> = segs.segments.iter().filter(|s| !s.data.is_empty()).collect();
    sorted.sort_by_key(|s| (s.start, s.data.len()));
    let first = sorted.first().ok_or(IngestError::EmptyInput)?;
    let base = first.start;
    let mut prev_end = base as u64;
    for s in &sorted {
        if (s.start as u64) < prev_end {
            return Err(IngestError::OverlappingSegments { at: s.start });
        }
        let gap = s.start as u64 - prev_end;
        if gap > gap_cap {
            return Err(IngestError::GapTooLarge {
                after: prev_end as u32,
                gap,
                cap: gap_cap,
            });
        }
        prev_end = s.end();
    }
    let mut bytes = vec![fill; (prev_end - base as u64) as usize];
    for s in &sorted {
        let off = (s.start - base) as usize;
        bytes[off..off + s.data.len()].copy_from_slice(&s.data);
    }
    let mut metadata = BTreeMap::new();
    if let Some(sa) = segs.start_address {
        metadata.insert(META_START_ADDRESS.to_string(), crate::hexnum::format_u32(sa));
    }
    if let Some(h) = &segs.header {
        metadata.insert(META_HEADER.to_string(), h.clone());
    }
    Ok(FirmwareImage {
        base: Some(base),
        bytes,
        fill,
        source_format: SourceFormat::Raw,
        metadata,
        detached: Vec::new(),
    })
}

/// Split off detached-window segments, then merge the rest.
pub fn image_from_segments(
    segs: &SegmentList,
    format: SourceFormat,
    opts: &LoadOptions,
) -> Result<FirmwareImage, IngestError> {
    let in_window = |s: &Segment| {
        opts.detached_windows
            .iter()
            .any(|&(lo, hi)| s.start >= lo && s.end() <= hi as u64 + 1)
    };
    let (detached, main): (Vec<Segment>, Vec<Segment>) =
        segs.segments.iter().cloned().partition(|s| in_window(s));
    if main.is_empty() {
        return Err(if detached.is_empty() {
            IngestError::EmptyInput
        } else {
            IngestError::NoData
        });
    }
    let main_list = SegmentList {
        segments: main,
        start_address: segs.start_address,
        header: segs.header.clone(),
    };
    let mut image = merge_segments_capped(&main_list, opts.fill, opts.gap_cap)?;
    image.source_format = format;
    if !detached.is_empty() {
        let listing = detached
            .iter()
            .map(|s| format!("{:#010x}+{:#x}", s.start, s.data.len()))
            .collect::<Vec<_>>()
            .join(",");
        image.metadata.insert(META_DETACHED.to_string(), listing);
    }
    image.detached = detached;
    Ok(image)
}

/// Shared hex-pair parsing for the text decoders.
pub(crate) fn parse_hex_bytes(s: &str, line: usize) -> Result<Vec<u8>, IngestError> {
    let b = s.as_bytes();
    if !b.len().is_multiple_of(2) {
        return Err(IngestError::TruncatedRecord { line });
    }
    b.chunks(2)
        .map(|pair| {
            let hi = (pair[0] as char).to_digit(16);
            let lo = (pair[1] as char).to_digit(16);
            match (hi, lo) {
                (Some(h), Some(l)) => Ok((h * 16 + l) as u8),
                _ => Err(IngestError::BadHexDigit { line }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn raw_wraps_bytes() {
        let img = load_raw(&[0u8; 1024], Some(0)).unwrap();
        assert_eq!(img.len(), 1024);
        assert_eq!(img.base, Some(0));
        assert_eq!(img.source_format, SourceFormat::Raw);
        let img = load_raw(&[1, 2, 3], None).unwrap();
        assert_eq!(img.base, None);
        assert_eq!(load_raw(&[], None), Err(IngestError::EmptyInput));
    }

    #[test]
    fn merge_fills_gaps() {
        let segs = SegmentList::from_segments(vec![
            Segment::new(0x0, vec![0xA]),
            Segment::new(0x4, vec![0xB]),
        ]);
        let img = merge_segments(&segs, 0xFF).unwrap();
        assert_eq!(img.bytes, vec![0xA, 0xFF, 0xFF, 0xFF, 0xB]);
        assert_eq!(img.base, Some(0));
    }

    #[test]
    fn merge_single_segment_is_identity() {
        let segs = SegmentList::from_segments(vec![Segment::new(0x0800_0000, vec![1, 2, 3, 4])]);
        let img = merge_segments(&segs, 0xFF).unwrap();
        assert_eq!(img.bytes, vec![1, 2, 3, 4]);
        assert_eq!(img.base, Some(0x0800_0000));
    }

    #[test]
    fn merge_rejects_huge_gap_and_overlap() {
        let segs = SegmentList::from_segments(vec![
            Segment::new(0x0, vec![1]),
            Segment::new(0x2000_0000, vec![2]),
        ]);
        assert!(matches!(
            merge_segments(&segs, 0xFF),
            Err(IngestError::GapTooLarge { .. })
        ));
        let segs = SegmentList::from_segments(vec![
            Segment::new(0x0, vec![1, 2, 3]),
            Segment::new(0x2, vec![2]),
        ]);
        assert_eq!(
            merge_segments(&segs, 0xFF),
            Err(IngestError::OverlappingSegments { at: 2 })
        );
    }

    #[test]
    fn detached_window_keeps_uicr_aside() {
        let segs = SegmentList::from_segments(vec![
            Segment::new(0x0, vec![0; 64]),
            Segment::new(0x1000_1208, 0xFFFF_FF00u32.to_le_bytes().to_vec()),
        ]);
        let img =
            image_from_segments(&segs, SourceFormat::IntelHex, &LoadOptions::default()).unwrap();
        assert_eq!(img.len(), 64);
        assert_eq!(img.detached.len(), 1);
        assert_eq!(img.read_u32(0x1000_1208), Some(0xFFFF_FF00));
        assert!(img.metadata.contains_key(META_DETACHED));
    }

    proptest! {
        #[test]
        fn merge_is_order_insensitive(
            starts in prop::collection::btree_set(0u32..64, 1..6),
            seed in any::<u8>(),
        ) {
            let segs: Vec<Segment> = starts
                .iter()
                .map(|&s| Segment::new(s * 16, vec![seed ^ s as u8; 8]))
                .collect();
            let fwd = merge_segments(&SegmentList::from_segments(segs.clone()), 0xFF).unwrap();
            let mut rev = segs;
            rev.reverse();
            let back = merge_segments(&SegmentList::from_segments(rev), 0xFF).unwrap();
            prop_assert_eq!(fwd, back);
        }
    }
}
