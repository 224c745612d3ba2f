//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use cm_scope::detectors::ProfileSet;
use cm_scope::ingest::{ihex, FormatRegistry, LoadOptions, Segment, SegmentList};
use cm_scope::{run_all, FeatureMatrix, FirmwareImage};
use thumb_asm::corpus::{SyntheticImage, UICR_BASE};

/// Load a synthetic image the way a user would receive it: a bare binary
/// with no declared base, or an Intel HEX package when it carries a UICR page.
pub fn load(img: &SyntheticImage) -> FirmwareImage {
    let registry = FormatRegistry::default();
    let opts = LoadOptions::default();
    let loaded = match &img.uicr {
        None => registry.decode(&img.bytes, Some("raw"), &opts),
        Some(uicr) => {
            let segs = SegmentList::from_segments(vec![
                Segment::new(img.base, img.bytes.clone()),
                Segment::new(UICR_BASE, uicr.clone()),
            ]);
            registry.decode(ihex::encode_intel_hex(&segs).as_bytes(), None, &opts)
        }
    };
    loaded
        .unwrap_or_else(|e| panic!("{}: {e}", img.name))
        .with_metadata(cm_scope::ingest::META_IMAGE_ID, img.name)
}

pub fn analyze(img: &SyntheticImage) -> FeatureMatrix {
    let profiles = ProfileSet::builtin();
    let profile = profiles.require(img.profile).expect("builtin profile");
    run_all(&load(img), profile)
}

/// Labels that disagree with the analysis, as `feature: expected != got`.
pub fn mismatches(img: &SyntheticImage, m: &FeatureMatrix) -> Vec<String> {
    let mut out = Vec::new();
    for (feature, expected) in &img.labels {
        let f: cm_scope::Feature = feature.parse().expect("feature key");
        let got = m.verdict(f).to_string();
        if got != *expected {
            out.push(format!("{feature}: expected {expected}, got {got}"));
        }
    }
    out
}
