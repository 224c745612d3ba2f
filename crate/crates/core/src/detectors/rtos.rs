//! RTOS identification and task stack-overflow guard detection.

use std::collections::BTreeMap;

use super::pipeline::Pipeline;
use super::{AnalysisContext, Detail, Detector, Evidence, Feature, Finding, Prior, Verdict};

fn occurrences(haystack: &str, needle: &str) -> usize {
    haystack.to_ascii_lowercase().matches(&needle.to_ascii_lowercase()).count()
}

/// RTOS names with the strings that support them. A signature counts if a
/// matching string is referenced from a call-tree function, or if the
/// signature occurs at least twice across all strings (a lone, unreferenced
/// hit is usually an SDK path in dead data).
pub(crate) fn detect_rtos_names(ctx: &AnalysisContext<'_>, p: &Pipeline<'_>) -> BTreeMap<String, Vec<u32>> {
    let mut out: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for sig in &ctx.profile.rtos_signatures {
        let mut hits = Vec::new();
        let mut count = 0;
        let mut referenced = false;
        for s in p.strings.iter() {
            let n: usize = sig.substrings.iter().map(|sub| occurrences(&s.text, sub)).sum();
            if n == 0 {
                continue;
            }
            count += n;
            referenced |= p.string_in_call_tree(s);
            hits.push(s.addr);
        }
        if referenced || count >= 2 {
            out.insert(sig.name.clone(), hits);
        }
    }
    out
}

pub struct RtosDetector;

impl Detector for RtosDetector {
    fn name(&self) -> &'static str {
        "rtos"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::Rtos]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, _: &Prior) -> Vec<Finding> {
        let p = ctx.pipeline().expect("pipeline");
        let found = detect_rtos_names(ctx, p);
        let evidence = found
            .iter()
            .flat_map(|(name, addrs)| addrs.iter().map(move |&a| Evidence::new(a, format!("{name} signature"))))
            .collect();
        let verdict = if found.is_empty() { Verdict::Absent } else { Verdict::Present };
        let names = found.into_keys().collect();
        vec![Finding::new(Feature::Rtos, verdict, evidence, Detail::Rtos { names })]
    }
}

/// Only meaningful for firmware built on an RTOS.
pub struct TaskGuardDetector;

impl Detector for TaskGuardDetector {
    fn name(&self) -> &'static str {
        "task_stack_guard"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::TaskStackGuard]
    }

    fn depends_on(&self) -> &'static [Feature] {
        &[Feature::Rtos]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, prior: &Prior) -> Vec<Finding> {
        let f = Feature::TaskStackGuard;
        let rtos: Vec<String> = match prior.get(&Feature::Rtos) {
            Some(Finding {
                verdict: Verdict::Present,
                detail: Detail::Rtos { names },
                ..
            }) => names.clone(),
            _ => {
                return vec![Finding::new(
                    f,
                    Verdict::Indeterminate,
                    Vec::new(),
                    Detail::TaskGuard { rtos: Vec::new(), markers: Vec::new() },
                )]
            }
        };
        let p = ctx.pipeline().expect("pipeline");
        let mut evidence = Vec::new();
        let mut markers = Vec::new();
        for name in &rtos {
            for m in ctx.profile.markers_for(name) {
                for s in p.strings.matching(m) {
                    if let Some(&x) = s.xrefs.iter().find(|&&x| p.site_in_call_tree(x)) {
                        evidence.push(Evidence::new(s.addr, format!("{name} guard marker `{m}` used at {x:#010x}")));
                        if !markers.iter().any(|k: &String| k == m) {
                            markers.push(m.to_string());
                        }
                    }
                }
            }
        }
        evidence.sort_by_key(|e| e.address);
        evidence.dedup_by_key(|e| e.address);
        let verdict = if evidence.is_empty() { Verdict::Absent } else { Verdict::Present };
        vec![Finding::new(f, verdict, evidence, Detail::TaskGuard { rtos, markers })]
    }
}
