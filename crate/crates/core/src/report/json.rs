use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detectors::{Feature, FeatureMatrix, Finding, Verdict};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed report: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("verdict summary for {0} disagrees with its finding")]
    Inconsistent(Feature),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema_version: u32,
    image_id: String,
    profile: String,
    device: Option<String>,
    #[serde(with = "crate::hexnum::opt")]
    base: Option<u32>,
    verdicts: BTreeMap<Feature, Verdict>,
    findings: BTreeMap<Feature, Finding>,
    notes: Vec<String>,
}

/// Pretty-printed report with keys in a fixed order.
pub fn to_json(m: &FeatureMatrix) -> String {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        image_id: m.image_id.clone(),
        profile: m.profile.clone(),
        device: m.device.clone(),
        base: m.base,
        verdicts: m.findings.iter().map(|(f, x)| (*f, x.verdict)).collect(),
        findings: m.findings.clone(),
        notes: m.notes.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<FeatureMatrix, JsonError> {
    let doc: Document = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(JsonError::Version(doc.schema_version));
    }
    for (f, v) in &doc.verdicts {
        if doc.findings.get(f).map(|x| x.verdict) != Some(*v) {
            return Err(JsonError::Inconsistent(*f));
        }
    }
    if let Some(f) = doc.findings.keys().find(|f| !doc.verdicts.contains_key(f)) {
        return Err(JsonError::Inconsistent(*f));
    }
    Ok(FeatureMatrix {
        image_id: doc.image_id,
        profile: doc.profile,
        device: doc.device,
        base: doc.base,
        findings: doc.findings,
        notes: doc.notes,
    })
}
