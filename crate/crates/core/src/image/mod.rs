//! Cortex-M memory map, vector-table parsing and load-base inference.

mod base;
mod memmap;
mod vectors;

pub use base::{
    infer_base_address, rank_bases, satisfies_hard_constraints, score_candidate, BaseCandidate,
    BaseError, BaseEvidence, BaseOptions, DEFAULT_ALIGNMENT, DEFAULT_LIMIT, HARD_VECTOR_SLOTS,
    MIN_IMAGE_LEN,
};
pub use memmap::{classify_address, default_memory_map, MemRegion, MemoryMap, RegionClass};
pub use vectors::{
    parse_vector_table, valid_handler, valid_initial_sp, VectorError, VectorTable, MAX_VECTORS,
};
