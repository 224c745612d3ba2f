//! Security-feature detectors and the analysis pipeline that feeds them.
//!
//! Each [`Detector`] is a strategy object producing [`Finding`]s for one or
//! more [`Feature`] rows; a [`DetectorRegistry`] orders them by declared
//! dependency and fills a [`FeatureMatrix`].

mod canary;
mod control;
mod mpu;
mod pipeline;
mod profile;
mod readback;
mod rtos;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use canary::{
    builtin_families, CanaryDetector, CanaryFamily, Template, TemplateError, CANARY_STRING,
    TERMINATOR_CANARY,
};
pub use control::{
    BarrierDetector, ControlWrite, PrivilegeDetector, StackLimitDetector, StackSeparationDetector,
    SvcDetector, BARRIER_WINDOW,
};
pub use mpu::{MpuDetector, MpuWriteRecord, SmpuDetector};
pub use pipeline::{build_pipeline, AnalysisContext, Pipeline, PipelineOptions};
pub use profile::{ProfileError, ProfileSet, ReadbackConfig, RtosSignature, StackGuardMarkers, VendorProfile};
pub use readback::ReadbackDetector;
pub use rtos::{RtosDetector, TaskGuardDetector};

use crate::ingest::{FirmwareImage, META_DEVICE, META_IMAGE_ID};

/// One row of the feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    ReadbackProtection,
    PrivilegeSeparation,
    SvcLibraryCall,
    StackSeparation,
    StackLimitRegisters,
    TaskStackGuard,
    Mpu,
    Smpu,
    StackCanaries,
    InstructionBarriers,
    /// Auxiliary row: the task-guard row depends on it.
    Rtos,
}

impl Feature {
    pub const ALL: [Feature; 11] = [
        Feature::ReadbackProtection,
        Feature::PrivilegeSeparation,
        Feature::SvcLibraryCall,
        Feature::StackSeparation,
        Feature::StackLimitRegisters,
        Feature::TaskStackGuard,
        Feature::Mpu,
        Feature::Smpu,
        Feature::StackCanaries,
        Feature::InstructionBarriers,
        Feature::Rtos,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Feature::ReadbackProtection => "readback_protection",
            Feature::PrivilegeSeparation => "privilege_separation",
            Feature::SvcLibraryCall => "svc_library_call",
            Feature::StackSeparation => "stack_separation",
            Feature::StackLimitRegisters => "stack_limit_registers",
            Feature::TaskStackGuard => "task_stack_guard",
            Feature::Mpu => "mpu",
            Feature::Smpu => "smpu",
            Feature::StackCanaries => "stack_canaries",
            Feature::InstructionBarriers => "instruction_barriers",
            Feature::Rtos => "rtos",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Feature::ReadbackProtection => "Readback Protection",
            Feature::PrivilegeSeparation => "Privilege Separation",
            Feature::SvcLibraryCall => "SVC for Library Call",
            Feature::StackSeparation => "Stack Separation",
            Feature::StackLimitRegisters => "Stack Limit Register Usage",
            Feature::TaskStackGuard => "Task Stack Ovf. Guard",
            Feature::Mpu => "Memory Access Control (MPU)",
            Feature::Smpu => "Memory Access Control (sMPU)",
            Feature::StackCanaries => "Stack Canaries",
            Feature::InstructionBarriers => "Proper Instruction Sync. Barriers",
            Feature::Rtos => "RTOS",
        }
    }

    /// Rows whose percentage is taken over images where the feature
    /// applies (Indeterminate excluded from the denominator).
    pub fn excludes_indeterminate(self) -> bool {
        matches!(self, Feature::TaskStackGuard | Feature::InstructionBarriers)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Feature::ALL
            .into_iter()
            .find(|f| f.key() == s)
            .ok_or_else(|| format!("unknown feature `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Present,
    Absent,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Present => "present",
            Verdict::Absent => "absent",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    #[serde(with = "crate::hexnum")]
    pub address: u32,
    pub note: String,
}

impl Evidence {
    pub fn new(address: u32, note: impl Into<String>) -> Self {
        Evidence {
            address,
            note: note.into(),
        }
    }
}

/// Feature-specific payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Detail {
    None,
    /// Analysis could not run.
    Error { message: String },
    Control {
        control_writes: usize,
        resolved: usize,
        /// Sites whose enclosing function is reachable in the call tree.
        reachable_sites: usize,
    },
    StackMode { psp_used: bool, spsel_set: bool },
    Sites {
        #[serde(with = "crate::hexnum::vec")]
        sites: Vec<u32>,
    },
    Svc { sites: usize, immediates: Vec<u8> },
    Barrier {
        control_writes: usize,
        #[serde(with = "crate::hexnum::vec")]
        non_compliant: Vec<u32>,
    },
    Mpu {
        writes: Vec<MpuWriteRecord>,
        enabled: bool,
        ns_alias_writes: usize,
        /// Outcome of replaying the resolved writes, when attempted.
        reconstruction: Option<String>,
        issues: Vec<crate::secmodel::IssueKind>,
    },
    Smpu {
        #[serde(with = "crate::hexnum::vec")]
        targets: Vec<u32>,
    },
    Canary {
        via_string: bool,
        families: Vec<String>,
        #[serde(with = "crate::hexnum::opt", default)]
        fixed_guard: Option<u32>,
    },
    Rtos { names: Vec<String> },
    TaskGuard { rtos: Vec<String>, markers: Vec<String> },
    Readback {
        #[serde(with = "crate::hexnum")]
        address: u32,
        #[serde(with = "crate::hexnum::opt", default)]
        word: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub feature: Feature,
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
    pub detail: Detail,
}

impl Finding {
    pub fn new(feature: Feature, verdict: Verdict, evidence: Vec<Evidence>, detail: Detail) -> Self {
        debug_assert!(verdict != Verdict::Present || !evidence.is_empty(), "{feature}: Present without evidence");
        Finding {
            feature,
            verdict,
            evidence,
            detail,
        }
    }

    pub fn indeterminate(feature: Feature, message: impl Into<String>) -> Self {
        Finding::new(
            feature,
            Verdict::Indeterminate,
            Vec::new(),
            Detail::Error {
                message: message.into(),
            },
        )
    }
}

/// Per-image verdicts, one finding per [`Feature`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub image_id: String,
    pub profile: String,
    #[serde(default)]
    pub device: Option<String>,
    #[serde(with = "crate::hexnum::opt", default)]
    pub base: Option<u32>,
    pub findings: BTreeMap<Feature, Finding>,
    /// Pipeline diagnostics.
    #[serde(default)]
    pub notes: Vec<String>,
}

impl FeatureMatrix {
    pub fn verdict(&self, f: Feature) -> Verdict {
        self.findings
            .get(&f)
            .map_or(Verdict::Indeterminate, |x| x.verdict)
    }

    pub fn finding(&self, f: Feature) -> Option<&Finding> {
        self.findings.get(&f)
    }

    /// Every feature appears exactly once and findings are keyed correctly.
    pub fn is_complete(&self) -> bool {
        Feature::ALL.iter().all(|f| self.findings.get(f).is_some_and(|x| x.feature == *f))
            && self.findings.len() == Feature::ALL.len()
    }
}

/// Already-computed findings, visible to dependent detectors.
pub type Prior = BTreeMap<Feature, Finding>;

pub trait Detector: Send + Sync {
    fn name(&self) -> &'static str;

    /// Rows this detector fills.
    fn features(&self) -> &'static [Feature];

    /// Rows that must be computed first.
    fn depends_on(&self) -> &'static [Feature] {
        &[]
    }

    /// Whether the detector needs the disassembly pipeline; if so and the
    /// pipeline failed, its rows become Indeterminate without running it.
    fn needs_pipeline(&self) -> bool {
        true
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, prior: &Prior) -> Vec<Finding>;
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unknown detector `{0}`")]
    UnknownDetector(String),
    #[error("dependency cycle among detectors: {0:?}")]
    Cycle(Vec<&'static str>),
}

/// Named detector strategies.
pub struct DetectorRegistry {
    detectors: Vec<Box<dyn Detector>>,
}

impl Default for DetectorRegistry {
    fn default() -> Self {
        let mut r = DetectorRegistry::empty();
        r.register(Box::new(ReadbackDetector));
        r.register(Box::new(PrivilegeDetector));
        r.register(Box::new(SvcDetector));
        r.register(Box::new(StackSeparationDetector));
        r.register(Box::new(StackLimitDetector));
        r.register(Box::new(RtosDetector));
        r.register(Box::new(TaskGuardDetector));
        r.register(Box::new(MpuDetector));
        r.register(Box::new(SmpuDetector));
        r.register(Box::new(CanaryDetector::builtin()));
        r.register(Box::new(BarrierDetector));
        r
    }
}

impl fmt::Debug for DetectorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl DetectorRegistry {
    pub fn empty() -> Self {
        DetectorRegistry {
            detectors: Vec::new(),
        }
    }

    /// Add a detector, replacing any with the same name.
    pub fn register(&mut self, d: Box<dyn Detector>) {
        self.detectors.retain(|x| x.name() != d.name());
        self.detectors.push(d);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.detectors.iter().map(|d| d.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Detector> {
        self.detectors.iter().find(|d| d.name() == name).map(|d| d.as_ref())
    }

    /// Keep only the named detectors.
    pub fn select(mut self, names: &[&str]) -> Result<Self, RegistryError> {
        for n in names {
            if self.get(n).is_none() {
                return Err(RegistryError::UnknownDetector(n.to_string()));
            }
        }
        self.detectors.retain(|d| names.contains(&d.name()));
        Ok(self)
    }

    /// Detectors in an order that satisfies every declared dependency
    /// produced by another registered detector.
    pub fn schedule(&self) -> Result<Vec<&dyn Detector>, RegistryError> {
        let produced = |f: &Feature| self.detectors.iter().any(|d| d.features().contains(f));
        let mut done: Vec<Feature> = Vec::new();
        let mut pending: Vec<&dyn Detector> = self.detectors.iter().map(|d| d.as_ref()).collect();
        let mut order = Vec::with_capacity(pending.len());
        while !pending.is_empty() {
            let ready = pending
                .iter()
                .position(|d| d.depends_on().iter().all(|f| done.contains(f) || !produced(f)));
            let Some(i) = ready else {
                return Err(RegistryError::Cycle(pending.iter().map(|d| d.name()).collect()));
            };
            let d = pending.remove(i);
            done.extend_from_slice(d.features());
            order.push(d);
        }
        Ok(order)
    }

    /// Run every detector over `ctx`. Rows no detector fills are
    /// Indeterminate.
    pub fn run(&self, ctx: &AnalysisContext<'_>) -> Result<BTreeMap<Feature, Finding>, RegistryError> {
        let mut prior = Prior::new();
        for d in self.schedule()? {
            let found = match (&ctx.pipeline, d.needs_pipeline()) {
                (Err(msg), true) => d
                    .features()
                    .iter()
                    .map(|&f| Finding::indeterminate(f, format!("analysis failed: {msg}")))
                    .collect(),
                _ => d.detect(ctx, &prior),
            };
            for f in found {
                prior.insert(f.feature, f);
            }
        }
        for f in Feature::ALL {
            prior
                .entry(f)
                .or_insert_with(|| Finding::indeterminate(f, "not evaluated"));
        }
        Ok(prior)
    }
}

/// Analyze one image with the default detectors.
pub fn run_all(image: &FirmwareImage, profile: &VendorProfile) -> FeatureMatrix {
    run_with(image, profile, &DetectorRegistry::default(), &PipelineOptions::default())
}

/// Analyze one image with a custom registry and pipeline options.
pub fn run_with(
    image: &FirmwareImage,
    profile: &VendorProfile,
    registry: &DetectorRegistry,
    opts: &PipelineOptions,
) -> FeatureMatrix {
    let ctx = AnalysisContext::new(image, profile, opts);
    let mut notes = Vec::new();
    if let Err(e) = &ctx.pipeline {
        notes.push(format!("pipeline: {e}"));
    }
    let findings = registry.run(&ctx).unwrap_or_else(|e| {
        notes.push(e.to_string());
        Feature::ALL
            .into_iter()
            .map(|f| (f, Finding::indeterminate(f, e.to_string())))
            .collect()
    });
    FeatureMatrix {
        image_id: image
            .metadata
            .get(META_IMAGE_ID)
            .cloned()
            .unwrap_or_else(|| "<memory>".to_string()),
        profile: profile.id.clone(),
        device: image.metadata.get(META_DEVICE).cloned(),
        base: ctx.base,
        findings,
        notes,
    }
}
