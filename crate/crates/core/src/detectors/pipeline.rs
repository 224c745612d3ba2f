use crate::cfg::{
    build_call_graph, const_value_at, effective_address, find_strings, identify_functions, CallGraph, FunctionSet,
    StringEntry, StringTable,
};
use crate::disasm::{disassemble, CodeView, DisasmOptions, InstrIndex, Kind};
use crate::image::{
    default_memory_map, infer_base_address, parse_vector_table, BaseOptions, MemoryMap, VectorTable,
};
use crate::ingest::FirmwareImage;

use super::profile::VendorProfile;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineOptions {
    pub base: BaseOptions,
    pub disasm: DisasmOptions,
}

/// Shared analysis products for one image.
#[derive(Debug)]
pub struct Pipeline<'a> {
    pub code: CodeView<'a>,
    pub map: MemoryMap,
    pub vectors: VectorTable,
    pub index: InstrIndex,
    pub functions: FunctionSet,
    pub callgraph: CallGraph,
    pub strings: StringTable,
}

impl Pipeline<'_> {
    /// Whether the function containing `addr` is part of the call tree.
    pub fn site_in_call_tree(&self, addr: u32) -> bool {
        self.functions
            .containing(addr)
            .is_some_and(|f| self.callgraph.in_call_tree(f.entry))
    }

    /// Whether any instruction referencing `s` lies in a call-tree function.
    pub fn string_in_call_tree(&self, s: &StringEntry) -> bool {
        s.xrefs.iter().any(|&x| self.site_in_call_tree(x))
    }

    /// Resolved `(site, target, value)` for every store instruction whose
    /// target address is a known constant.
    pub fn resolved_stores(&self) -> Vec<(u32, u32, Option<u32>)> {
        self.index
            .iter()
            .filter_map(|ins| {
                let (rt, rn, off) = match ins.kind {
                    Kind::StrImm { rt, rn, off } => (rt, rn, off),
                    Kind::StrT { rt, rn, off } => (rt, rn, off as i32),
                    _ => return None,
                };
                let target = effective_address(&self.index, ins.addr, rn, off)?;
                Some((ins.addr, target, const_value_at(&self.index, ins.addr, rt)))
            })
            .collect()
    }
}

/// Everything a detector can see.
#[derive(Debug)]
pub struct AnalysisContext<'a> {
    pub image: &'a FirmwareImage,
    pub profile: &'a VendorProfile,
    /// Declared or inferred load address.
    pub base: Option<u32>,
    pub pipeline: Result<Pipeline<'a>, String>,
}

impl<'a> AnalysisContext<'a> {
    pub fn new(image: &'a FirmwareImage, profile: &'a VendorProfile, opts: &PipelineOptions) -> Self {
        let map = default_memory_map();
        let base = match image.base {
            Some(b) => Ok(b),
            None => infer_base_address(&image.bytes, &map, &opts.base)
                .map(|c| c.base)
                .map_err(|e| format!("base inference: {e}")),
        };
        let pipeline = base
            .clone()
            .and_then(|b| build_pipeline(CodeView::new(b, &image.bytes), map, &opts.disasm));
        AnalysisContext {
            image,
            profile,
            base: base.ok(),
            pipeline,
        }
    }

    /// Word at `addr` in the image (at the effective base) or a detached
    /// segment.
    pub fn read_u32(&self, addr: u32) -> Option<u32> {
        if let Some(base) = self.base {
            if let Some(v) = CodeView::new(base, &self.image.bytes).read_u32(addr) {
                return Some(v);
            }
        }
        self.image.detached.iter().find_map(|s| s.read_u32(addr))
    }

    pub fn pipeline(&self) -> Option<&Pipeline<'a>> {
        self.pipeline.as_ref().ok()
    }
}

/// Vector table → disassembly → functions → call graph → strings.
pub fn build_pipeline<'a>(
    code: CodeView<'a>,
    map: MemoryMap,
    opts: &DisasmOptions,
) -> Result<Pipeline<'a>, String> {
    let vectors = parse_vector_table(&code, &map).map_err(|e| format!("vector table: {e}"))?;
    let index = disassemble(&code, vectors.entry_points(), opts);
    if !index.exhausted() {
        log::warn!("disassembly stopped at the instruction cap");
    }
    let functions = identify_functions(&index);
    let callgraph = build_call_graph(&functions, &index, Some(vectors.reset_entry()));
    let strings = find_strings(&code, &index);
    Ok(Pipeline {
        code,
        map,
        vectors,
        index,
        functions,
        callgraph,
        strings,
    })
}
