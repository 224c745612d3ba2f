//! CONTROL-register, SVC, stack-limit and barrier detectors.

use std::collections::BTreeSet;

use crate::cfg::{const_value_at, reaching_def};
use crate::disasm::{sysm, InstrIndex, Kind};

use super::pipeline::Pipeline;
use super::{AnalysisContext, Detail, Detector, Evidence, Feature, Finding, Prior, Verdict};

/// An ISB must appear within this many instructions after a CONTROL write.
pub const BARRIER_WINDOW: usize = 10;

const NPRIV: u32 = 1;
const SPSEL: u32 = 2;

/// An `MSR CONTROL, Rn` site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlWrite {
    pub site: u32,
    pub rn: u8,
    /// Fully known value written.
    pub value: Option<u32>,
    /// Bits known to be set even when the full value is not, e.g. by
    /// `MRS r0, CONTROL; ORR r0, r0, #1`.
    pub forced: u32,
}

fn forced_bits(index: &InstrIndex, addr: u32, reg: u8, depth: u8) -> u32 {
    if let Some(v) = const_value_at(index, addr, reg) {
        return v;
    }
    if depth == 0 {
        return 0;
    }
    match reaching_def(index, addr, reg).map(|i| (i.addr, i.kind)) {
        Some((at, Kind::OrrImm { rd, rn, imm })) if rd == reg => imm | forced_bits(index, at, rn, depth - 1),
        _ => 0,
    }
}

pub fn control_writes(index: &InstrIndex) -> Vec<ControlWrite> {
    index
        .iter()
        .filter_map(|ins| match ins.kind {
            Kind::MsrSpecial { sysm: s, rn } if sysm::is_control(s) => {
                let value = const_value_at(index, ins.addr, rn);
                Some(ControlWrite {
                    site: ins.addr,
                    rn,
                    value,
                    forced: value.unwrap_or_else(|| forced_bits(index, ins.addr, rn, 4)),
                })
            }
            _ => None,
        })
        .collect()
}

fn describe(w: &ControlWrite) -> String {
    match w.value {
        Some(v) => format!("MSR CONTROL, r{} = {v:#x}", w.rn),
        None if w.forced != 0 => format!("MSR CONTROL, r{} sets bits {:#x}", w.rn, w.forced),
        None => format!("MSR CONTROL, r{} (value unknown)", w.rn),
    }
}

fn pipeline_of<'a, 'b>(ctx: &'b AnalysisContext<'a>) -> &'b Pipeline<'a> {
    ctx.pipeline().expect("registry only runs pipeline detectors with a pipeline")
}

pub struct PrivilegeDetector;

impl Detector for PrivilegeDetector {
    fn name(&self) -> &'static str {
        "privilege_separation"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::PrivilegeSeparation]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, _: &Prior) -> Vec<Finding> {
        let p = pipeline_of(ctx);
        let writes = control_writes(&p.index);
        let dropping: Vec<&ControlWrite> = writes.iter().filter(|w| w.forced & NPRIV != 0).collect();
        let resolved = writes.iter().filter(|w| w.value.is_some()).count();
        let verdict = if !dropping.is_empty() {
            Verdict::Present
        } else if !writes.is_empty() && resolved == 0 {
            Verdict::Indeterminate
        } else {
            Verdict::Absent
        };
        let shown: Vec<&ControlWrite> = if dropping.is_empty() { writes.iter().collect() } else { dropping };
        let evidence = shown
            .iter()
            .map(|w| {
                let reach = if p.site_in_call_tree(w.site) { "reachable" } else { "not reached from reset" };
                Evidence::new(w.site, format!("{} ({reach})", describe(w)))
            })
            .collect();
        let detail = Detail::Control {
            control_writes: writes.len(),
            resolved,
            reachable_sites: writes.iter().filter(|w| p.site_in_call_tree(w.site)).count(),
        };
        vec![Finding::new(Feature::PrivilegeSeparation, verdict, evidence, detail)]
    }
}

pub struct StackSeparationDetector;

impl Detector for StackSeparationDetector {
    fn name(&self) -> &'static str {
        "stack_separation"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::StackSeparation]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, _: &Prior) -> Vec<Finding> {
        let p = pipeline_of(ctx);
        let mut evidence = Vec::new();
        let mut spsel_set = false;
        for w in control_writes(&p.index) {
            if w.forced & SPSEL != 0 {
                spsel_set = true;
                evidence.push(Evidence::new(w.site, describe(&w)));
            }
        }
        let mut psp_used = false;
        for ins in p.index.iter() {
            if let Kind::MsrSpecial { sysm: s, rn } = ins.kind {
                if sysm::is_psp(s) {
                    psp_used = true;
                    evidence.push(Evidence::new(ins.addr, format!("MSR {}, r{rn}", sysm::name(s).unwrap_or("PSP"))));
                }
            }
        }
        let verdict = if spsel_set || psp_used { Verdict::Present } else { Verdict::Absent };
        vec![Finding::new(
            Feature::StackSeparation,
            verdict,
            evidence,
            Detail::StackMode { psp_used, spsel_set },
        )]
    }
}

pub struct StackLimitDetector;

impl Detector for StackLimitDetector {
    fn name(&self) -> &'static str {
        "stack_limit_registers"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::StackLimitRegisters]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, _: &Prior) -> Vec<Finding> {
        let p = pipeline_of(ctx);
        let evidence: Vec<Evidence> = p
            .index
            .iter()
            .filter_map(|ins| match ins.kind {
                Kind::MsrSpecial { sysm: s, rn } if sysm::is_stack_limit(s) => Some(Evidence::new(
                    ins.addr,
                    format!("MSR {}, r{rn}", sysm::name(s).unwrap_or("?")),
                )),
                _ => None,
            })
            .collect();
        let sites = evidence.iter().map(|e| e.address).collect();
        let verdict = if evidence.is_empty() { Verdict::Absent } else { Verdict::Present };
        vec![Finding::new(Feature::StackLimitRegisters, verdict, evidence, Detail::Sites { sites })]
    }
}

/// SVC used as a plain library-call gate: SVC sites exist while all code
/// stays privileged.
pub struct SvcDetector;

impl Detector for SvcDetector {
    fn name(&self) -> &'static str {
        "svc_library_call"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::SvcLibraryCall]
    }

    fn depends_on(&self) -> &'static [Feature] {
        &[Feature::PrivilegeSeparation]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, prior: &Prior) -> Vec<Finding> {
        let p = pipeline_of(ctx);
        let sites: Vec<(u32, u8)> = p
            .index
            .iter()
            .filter_map(|i| match i.kind {
                Kind::Svc(n) => Some((i.addr, n)),
                _ => None,
            })
            .collect();
        let immediates: BTreeSet<u8> = sites.iter().map(|s| s.1).collect();
        let privsep = prior
            .get(&Feature::PrivilegeSeparation)
            .map_or(Verdict::Indeterminate, |f| f.verdict);
        let verdict = if sites.is_empty() {
            Verdict::Absent
        } else {
            match privsep {
                Verdict::Absent => Verdict::Present,
                Verdict::Present => Verdict::Absent,
                Verdict::Indeterminate => Verdict::Indeterminate,
            }
        };
        let evidence = sites
            .iter()
            .map(|&(a, n)| Evidence::new(a, format!("SVC #{n}")))
            .collect();
        vec![Finding::new(
            Feature::SvcLibraryCall,
            verdict,
            evidence,
            Detail::Svc {
                sites: sites.len(),
                immediates: immediates.into_iter().collect(),
            },
        )]
    }
}

/// Every CONTROL write must be followed by an ISB within
/// [`BARRIER_WINDOW`] instructions.
pub struct BarrierDetector;

pub(crate) fn barrier_compliant(index: &InstrIndex, site: u32) -> bool {
    index
        .after(site)
        .take(BARRIER_WINDOW)
        .any(|i| i.kind == Kind::Isb)
}

impl Detector for BarrierDetector {
    fn name(&self) -> &'static str {
        "instruction_barriers"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::InstructionBarriers]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, _: &Prior) -> Vec<Finding> {
        let p = pipeline_of(ctx);
        let writes = control_writes(&p.index);
        let non_compliant: Vec<u32> = writes
            .iter()
            .map(|w| w.site)
            .filter(|&s| !barrier_compliant(&p.index, s))
            .collect();
        let verdict = match (writes.is_empty(), non_compliant.is_empty()) {
            (true, _) => Verdict::Indeterminate,
            (false, true) => Verdict::Present,
            (false, false) => Verdict::Absent,
        };
        let evidence = writes
            .iter()
            .map(|w| {
                let ok = !non_compliant.contains(&w.site);
                Evidence::new(
                    w.site,
                    if ok {
                        format!("ISB within {BARRIER_WINDOW} instructions")
                    } else {
                        format!("no ISB within {BARRIER_WINDOW} instructions")
                    },
                )
            })
            .collect();
        vec![Finding::new(
            Feature::InstructionBarriers,
            verdict,
            evidence,
            Detail::Barrier {
                control_writes: writes.len(),
                non_compliant,
            },
        )]
    }
}
