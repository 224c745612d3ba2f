use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::memmap::MemoryMap;
use super::vectors::{valid_handler, valid_initial_sp};
use crate::disasm::{decode_one, disassemble, CodeView, DisasmOptions, Kind, LR};

/// Default candidate alignment (flash page granularity).
pub const DEFAULT_ALIGNMENT: u32 = 0x1000;
/// Candidates are enumerated below this address.
pub const DEFAULT_LIMIT: u32 = 0x1000_0000;
/// Vector slots after the SP checked as hard constraints: reset plus the
/// fourteen other architectural exception vectors.
pub const HARD_VECTOR_SLOTS: usize = 15;
/// Smallest image with room for a minimal vector table.
pub const MIN_IMAGE_LEN: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BaseError {
    #[error("image of {0} bytes is too small for a vector table")]
    ImageTooSmall(usize),
    #[error("no candidate base satisfies the vector-table constraints")]
    NoViableBase,
    #[error("alignment {0:#x} is not a non-zero power of two")]
    BadAlignment(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseOptions {
    pub alignment: u32,
    pub limit: u32,
    /// A declared base is always evaluated, even off-grid or above `limit`.
    pub declared: Option<u32>,
    /// Replace the enumerated grid entirely.
    pub candidates: Option<Vec<u32>>,
}

impl Default for BaseOptions {
    fn default() -> Self {
        BaseOptions {
            alignment: DEFAULT_ALIGNMENT,
            limit: DEFAULT_LIMIT,
            declared: None,
            candidates: None,
        }
    }
}

/// Counts behind a candidate's score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BaseEvidence {
    /// Non-zero vector slots (including reset) that point into the image.
    pub vector_pointers: u32,
    /// Odd in-range words landing on a plausible function entry: a `BL`
    /// target recovered from the vector entries, or a `PUSH {.., lr}`.
    pub pointer_hits: u32,
    /// Aligned words in the image.
    pub total_words: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseCandidate {
    #[serde(with = "crate::hexnum")]
    pub base: u32,
    pub evidence: BaseEvidence,
}

impl BaseCandidate {
    /// Score as the exact ratio `(pointer_hits, total_words)`.
    pub fn score_ratio(&self) -> (u32, u32) {
        (self.evidence.pointer_hits, self.evidence.total_words.max(1))
    }

    pub fn score(&self) -> f64 {
        let (n, d) = self.score_ratio();
        n as f64 / d as f64
    }

    fn cmp_score(&self, other: &Self) -> Ordering {
        let (a, b) = self.score_ratio();
        let (c, d) = other.score_ratio();
        (a as u64 * d as u64).cmp(&(c as u64 * b as u64))
    }
}

fn word_at(bytes: &[u8], off: usize) -> Option<u32> {
    let b = bytes.get(off..off + 4)?;
    Some(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

/// Whether `base` satisfies the hard vector-table constraints.
pub fn satisfies_hard_constraints(bytes: &[u8], base: u32, map: &MemoryMap) -> bool {
    let Some(sp) = word_at(bytes, 0) else {
        return false;
    };
    if !valid_initial_sp(map, sp) {
        return false;
    }
    let hi = base as u64 + bytes.len() as u64;
    if hi > 1u64 << 32 {
        return false;
    }
    let reset = word_at(bytes, 4).unwrap_or(0);
    if reset == 0 {
        return false;
    }
    (1..=HARD_VECTOR_SLOTS)
        .map_while(|i| word_at(bytes, 4 * i))
        .all(|v| valid_handler(v, base, hi))
}

fn candidate_grid(bytes: &[u8], opts: &BaseOptions) -> Vec<u32> {
    if let Some(c) = &opts.candidates {
        let mut c = c.clone();
        c.extend(opts.declared);
        c.sort_unstable();
        c.dedup();
        return c;
    }
    let len = bytes.len() as u64;
    let mut lo = 0u64;
    let mut hi = opts.limit as u64;
    // Each non-zero slot pins base into (ptr - len, ptr].
    for v in (1..=HARD_VECTOR_SLOTS).filter_map(|i| word_at(bytes, 4 * i)) {
        if v == 0 {
            continue;
        }
        let p = (v & !1) as u64;
        lo = lo.max((p + 1).saturating_sub(len));
        hi = hi.min(p + 1);
    }
    let align = opts.alignment as u64;
    let mut out = Vec::new();
    let mut b = lo.div_ceil(align) * align;
    while b < hi {
        out.push(b as u32);
        b += align;
    }
    out.extend(opts.declared);
    out.sort_unstable();
    out.dedup();
    out
}

/// Score one candidate base.
pub fn score_candidate(bytes: &[u8], base: u32) -> BaseCandidate {
    let code = CodeView::new(base, bytes);
    let hi = code.end();
    let slots: Vec<u32> = (1..)
        .map_while(|i| word_at(bytes, 4 * i).filter(|_| i <= HARD_VECTOR_SLOTS))
        .collect();
    let entries: Vec<u32> = slots
        .iter()
        .filter(|&&v| v != 0 && valid_handler(v, base, hi))
        .map(|v| v & !1)
        .collect();
    let opts = DisasmOptions {
        follow_literal_pointers: false,
        ..Default::default()
    };
    let index = disassemble(&code, entries.iter().copied(), &opts);
    let mut hits = 0u32;
    let total = (bytes.len() / 4) as u32;
    for off in (0..bytes.len() / 4 * 4).step_by(4) {
        let w = word_at(bytes, off).unwrap_or(0);
        if w & 1 == 0 {
            continue;
        }
        let target = w & !1;
        if !code.contains(target) {
            continue;
        }
        // Merely decoding is not enough: every vector slot is an entry
        // point and so "decodes" at any feasible base.
        let hit = index.call_targets().contains(&target)
            || matches!(decode_one(&code, target), Ok(i) if matches!(i.kind, Kind::Push(l) if l & (1 << LR) != 0));
        if hit {
            hits += 1;
        }
    }
    BaseCandidate {
        base,
        evidence: BaseEvidence {
            vector_pointers: entries.len() as u32,
            pointer_hits: hits,
            total_words: total,
        },
    }
}

/// Every feasible candidate with its score, in ascending base order.
pub fn rank_bases(
    bytes: &[u8],
    map: &MemoryMap,
    opts: &BaseOptions,
) -> Result<Vec<BaseCandidate>, BaseError> {
    if bytes.len() < MIN_IMAGE_LEN {
        return Err(BaseError::ImageTooSmall(bytes.len()));
    }
    if opts.alignment == 0 || !opts.alignment.is_power_of_two() {
        return Err(BaseError::BadAlignment(opts.alignment));
    }
    Ok(candidate_grid(bytes, opts)
        .into_iter()
        .filter(|&b| satisfies_hard_constraints(bytes, b, map))
        .map(|b| score_candidate(bytes, b))
        .collect())
}

/// Highest-scoring feasible base; ties go to the lowest address.
pub fn infer_base_address(
    bytes: &[u8],
    map: &MemoryMap,
    opts: &BaseOptions,
) -> Result<BaseCandidate, BaseError> {
    let ranked = rank_bases(bytes, map, opts)?;
    let mut best: Option<BaseCandidate> = None;
    for c in ranked {
        match &best {
            Some(b) if c.cmp_score(b) != Ordering::Greater => {}
            _ => best = Some(c),
        }
    }
    let best = best.ok_or(BaseError::NoViableBase)?;
    log::debug!(
        "inferred base {:#010x} ({}/{} pointer hits)",
        best.base,
        best.evidence.pointer_hits,
        best.evidence.total_words
    );
    Ok(best)
}
