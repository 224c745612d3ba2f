//! Static analysis of raw Cortex-M firmware images.
//!
//! The pipeline runs container decoding ([`ingest`]), base-address and
//! vector-table recovery ([`image`]), recursive Thumb-2 disassembly
//! ([`disasm`]), function and string recovery ([`cfg`]) and a registry of
//! security-feature detectors ([`detectors`]). Recovered protection state can
//! be evaluated against an executable model of the MPU and TrustZone-M
//! attribution semantics ([`secmodel`]); per-image results are serialized and
//! aggregated across a corpus by [`report`].

pub mod cfg;
pub mod detectors;
pub mod disasm;
pub mod hexnum;
pub mod image;
pub mod ingest;
pub mod report;
pub mod secmodel;

pub use detectors::{run_all, Feature, FeatureMatrix, Finding, Verdict, VendorProfile};
pub use ingest::{FirmwareImage, Segment, SegmentList, SourceFormat};
