use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::memmap::MemoryMap;
use crate::disasm::CodeView;

/// Upper bound on table length, in words (SP + reset + handlers).
pub const MAX_VECTORS: usize = 512;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum VectorError {
    #[error("initial SP {0:#010x} is not a word-aligned RAM address")]
    InvalidInitialSp(u32),
    #[error("reset vector {0:#010x} is not a Thumb pointer into the image")]
    InvalidResetVector(u32),
    #[error("image does not cover a vector table at {0:#010x}")]
    TableTruncated(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorTable {
    #[serde(with = "crate::hexnum")]
    pub table_address: u32,
    #[serde(with = "crate::hexnum")]
    pub initial_sp: u32,
    #[serde(with = "crate::hexnum")]
    pub reset: u32,
    /// Entries 2.. up to the last valid non-zero word.
    #[serde(with = "crate::hexnum::vec")]
    pub handlers: Vec<u32>,
}

impl VectorTable {
    pub fn reset_entry(&self) -> u32 {
        self.reset & !1
    }

    /// Reset and every populated handler, Thumb bit stripped.
    pub fn entry_points(&self) -> BTreeSet<u32> {
        std::iter::once(self.reset)
            .chain(self.handlers.iter().copied())
            .filter(|&v| v != 0)
            .map(|v| v & !1)
            .collect()
    }

    /// Number of words the table occupies.
    pub fn len_words(&self) -> usize {
        2 + self.handlers.len()
    }
}

/// Whether `v` may appear in a handler slot of an image spanning
/// `[lo, hi)`: zero (reserved) or an odd pointer inside the span.
pub fn valid_handler(v: u32, lo: u32, hi: u64) -> bool {
    v == 0 || (v & 1 == 1 && (v & !1) >= lo && ((v & !1) as u64) < hi)
}

pub fn valid_initial_sp(map: &MemoryMap, sp: u32) -> bool {
    sp & 3 == 0 && map.classify(sp).is_ram()
}

/// Parse the table at the start of `code`.
pub fn parse_vector_table(code: &CodeView<'_>, map: &MemoryMap) -> Result<VectorTable, VectorError> {
    let base = code.base;
    let sp = code.read_u32(base).ok_or(VectorError::TableTruncated(base))?;
    let reset = code
        .read_u32(base.wrapping_add(4))
        .ok_or(VectorError::TableTruncated(base))?;
    if !valid_initial_sp(map, sp) {
        return Err(VectorError::InvalidInitialSp(sp));
    }
    let hi = code.end();
    if reset == 0 || !valid_handler(reset, base, hi) {
        return Err(VectorError::InvalidResetVector(reset));
    }
    let mut handlers = Vec::new();
    for i in 2..MAX_VECTORS {
        let Some(v) = code.read_u32(base.wrapping_add(4 * i as u32)) else {
            break;
        };
        if !valid_handler(v, base, hi) {
            break;
        }
        handlers.push(v);
    }
    while handlers.last() == Some(&0) {
        handlers.pop();
    }
    Ok(VectorTable {
        table_address: base,
        initial_sp: sp,
        reset,
        handlers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::default_memory_map;

    fn image(words: &[u32], pad_to: usize) -> Vec<u8> {
        let mut v: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
        v.resize(pad_to, 0xFF);
        v
    }

    #[test]
    fn reads_sp_reset_and_handlers() {
        let bytes = image(&[0x2000_2000, 0xC1, 0xD5, 0, 0xD5, 0x1234_5678], 0x100);
        let vt = parse_vector_table(&CodeView::new(0, &bytes), &default_memory_map()).unwrap();
        assert_eq!(vt.initial_sp, 0x2000_2000);
        assert_eq!(vt.reset, 0xC1);
        assert_eq!(vt.reset_entry(), 0xC0);
        assert_eq!(vt.handlers, vec![0xD5, 0, 0xD5]);
        assert_eq!(vt.entry_points().into_iter().collect::<Vec<_>>(), vec![0xC0, 0xD4]);
    }

    #[test]
    fn rejects_code_region_sp_and_even_reset() {
        let map = default_memory_map();
        let bytes = image(&[0x0800_0000, 0xC1], 0x100);
        assert_eq!(
            parse_vector_table(&CodeView::new(0, &bytes), &map),
            Err(VectorError::InvalidInitialSp(0x0800_0000))
        );
        let bytes = image(&[0x2000_2000, 0xC0], 0x100);
        assert_eq!(
            parse_vector_table(&CodeView::new(0, &bytes), &map),
            Err(VectorError::InvalidResetVector(0xC0))
        );
        let bytes = image(&[0x2000_2000], 4);
        assert_eq!(
            parse_vector_table(&CodeView::new(0, &bytes), &map),
            Err(VectorError::TableTruncated(0))
        );
    }
}
