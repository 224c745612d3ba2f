//! Architectural MPU and vendor sMPU configuration detectors.

use serde::{Deserialize, Serialize};

use crate::disasm::Kind;
use crate::secmodel::{
    audit_mpu_config, in_mpu_ns_alias, in_mpu_window, reconstruct_mpu_config, Arch, RegWrite, MPU_CTRL,
};

use super::{AnalysisContext, Detail, Detector, Evidence, Feature, Finding, Prior, Verdict};

/// A store into the MPU register block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpuWriteRecord {
    #[serde(with = "crate::hexnum")]
    pub site: u32,
    #[serde(with = "crate::hexnum")]
    pub register: u32,
    #[serde(with = "crate::hexnum::opt", default)]
    pub value: Option<u32>,
}

/// Armv8-M if the code uses any v8-only instruction or register.
fn guess_arch(ctx: &AnalysisContext<'_>) -> Arch {
    let Some(p) = ctx.pipeline() else { return Arch::V7m };
    let v8 = p.index.iter().any(|i| match i.kind {
        Kind::Sg | Kind::Bxns(_) | Kind::Blxns(_) | Kind::Tt { .. } => true,
        Kind::MsrSpecial { sysm, .. } | Kind::MrsSpecial { sysm, .. } => {
            crate::disasm::sysm::is_stack_limit(sysm) || sysm & 0x80 != 0
        }
        _ => false,
    });
    if v8 {
        Arch::V8m
    } else {
        Arch::V7m
    }
}

pub struct MpuDetector;

impl Detector for MpuDetector {
    fn name(&self) -> &'static str {
        "mpu"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::Mpu]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, _: &Prior) -> Vec<Finding> {
        let p = ctx.pipeline().expect("pipeline");
        let mut writes = Vec::new();
        let mut ns_alias = 0;
        for (site, target, value) in p.resolved_stores() {
            if in_mpu_window(target) {
                writes.push(MpuWriteRecord { site, register: target, value });
            } else if in_mpu_ns_alias(target) {
                log::debug!("{site:#010x}: non-secure MPU alias write to {target:#010x} skipped");
                ns_alias += 1;
            }
        }
        let enabling: Vec<&MpuWriteRecord> = writes
            .iter()
            .filter(|w| w.register == MPU_CTRL && w.value.is_none_or(|v| v & 1 == 1))
            .collect();
        let verdict = match (writes.is_empty(), enabling.is_empty()) {
            (true, _) => Verdict::Absent,
            (false, false) => Verdict::Present,
            (false, true) => Verdict::Indeterminate,
        };
        let evidence = writes
            .iter()
            .map(|w| {
                let v = w.value.map_or("unknown".to_string(), |v| format!("{v:#x}"));
                Evidence::new(w.site, format!("store {v} to {:#010x}", w.register))
            })
            .collect();
        let resolved: Vec<RegWrite> = writes
            .iter()
            .filter_map(|w| w.value.map(|v| RegWrite::new(w.register, v)))
            .collect();
        let (reconstruction, issues) = if resolved.is_empty() {
            (None, Vec::new())
        } else {
            let arch = guess_arch(ctx);
            match reconstruct_mpu_config(&resolved, arch) {
                Ok(cfg) => {
                    let issues = audit_mpu_config(&cfg, &p.map).into_iter().map(|i| i.kind).collect();
                    let msg = format!(
                        "{arch:?}: {} region(s), MPU {}",
                        cfg.regions.len(),
                        if cfg.enable { "enabled" } else { "disabled" }
                    );
                    (Some(msg), issues)
                }
                Err(e) => (Some(format!("{arch:?}: {e}")), Vec::new()),
            }
        };
        let detail = Detail::Mpu {
            enabled: !enabling.is_empty(),
            writes,
            ns_alias_writes: ns_alias,
            reconstruction,
            issues,
        };
        vec![Finding::new(Feature::Mpu, verdict, evidence, detail)]
    }
}

pub struct SmpuDetector;

impl Detector for SmpuDetector {
    fn name(&self) -> &'static str {
        "smpu"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::Smpu]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, _: &Prior) -> Vec<Finding> {
        let p = ctx.pipeline().expect("pipeline");
        let addrs = ctx.profile.smpu_addresses();
        let hits: Vec<(u32, u32)> = p
            .resolved_stores()
            .into_iter()
            .filter(|(_, t, _)| addrs.contains(t))
            .map(|(s, t, _)| (s, t))
            .collect();
        let mut targets: Vec<u32> = hits.iter().map(|h| h.1).collect();
        targets.sort_unstable();
        targets.dedup();
        let verdict = if hits.is_empty() { Verdict::Absent } else { Verdict::Present };
        let evidence = hits
            .iter()
            .map(|&(s, t)| Evidence::new(s, format!("store to sMPU register {t:#010x}")))
            .collect();
        vec![Finding::new(Feature::Smpu, verdict, evidence, Detail::Smpu { targets })]
    }
}
