//! Whole-address-space weakness audit of an MPU configuration.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::mpu::{eval_unchecked, Access, MpuConfig, Privilege};
use crate::image::MemoryMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IssueKind {
    MpuDisabled,
    ExecutableSram,
    WritableAndExecutable,
    NoUnprivilegedRestriction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    /// First address exhibiting the issue.
    #[serde(with = "crate::hexnum::opt", default)]
    pub at: Option<u32>,
}

/// Half-open intervals over which every access decision is constant.
pub fn elementary_intervals(cfg: &MpuConfig, map: &MemoryMap) -> Vec<(u32, u64)> {
    let mut points: BTreeSet<u64> = BTreeSet::from([0, 1 << 32]);
    for r in map.regions() {
        points.insert(r.start as u64);
        points.insert(r.end as u64 + 1);
    }
    for r in &cfg.regions {
        points.extend(r.boundaries());
    }
    let pts: Vec<u64> = points.into_iter().filter(|&p| p <= 1 << 32).collect();
    pts.windows(2).map(|w| (w[0] as u32, w[1])).collect()
}

pub fn audit_mpu_config(cfg: &MpuConfig, map: &MemoryMap) -> Vec<Issue> {
    let mut found: Vec<Issue> = Vec::new();
    let mut note = |kind, at| {
        if !found.iter().any(|i: &Issue| i.kind == kind) {
            found.push(Issue { kind, at });
        }
    };
    if !cfg.enable {
        note(IssueKind::MpuDisabled, None);
    }
    let mut restricted = false;
    for (start, _) in elementary_intervals(cfg, map) {
        let ok = |p, a| eval_unchecked(cfg, map, start, p, a);
        let any = |a| Privilege::ALL.iter().any(|&p| ok(p, a));
        let exec = any(Access::Execute);
        if exec && map.classify(start).is_ram() {
            note(IssueKind::ExecutableSram, Some(start));
        }
        if exec && any(Access::Write) {
            note(IssueKind::WritableAndExecutable, Some(start));
        }
        if Access::ALL
            .iter()
            .any(|&a| ok(Privilege::Privileged, a) != ok(Privilege::Unprivileged, a))
        {
            restricted = true;
        }
    }
    if !restricted {
        note(IssueKind::NoUnprivilegedRestriction, None);
    }
    found.sort_by_key(|i| i.kind);
    found
}
