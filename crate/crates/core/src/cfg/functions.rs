use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::disasm::{InstrIndex, Kind, LR};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Function {
    #[serde(with = "crate::hexnum")]
    pub entry: u32,
    /// Contiguous decoded runs `[start, end)` making up the body.
    pub ranges: Vec<(u32, u64)>,
}

impl Function {
    pub fn contains(&self, addr: u32) -> bool {
        self.ranges
            .iter()
            .any(|&(s, e)| addr >= s && (addr as u64) < e)
    }

    pub fn end(&self) -> u64 {
        self.ranges.last().map_or(self.entry as u64, |r| r.1)
    }
}

/// Recovered functions, sorted by entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FunctionSet {
    functions: Vec<Function>,
}

impl FunctionSet {
    pub fn iter(&self) -> impl Iterator<Item = &Function> + '_ {
        self.functions.iter()
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = u32> + '_ {
        self.functions.iter().map(|f| f.entry)
    }

    pub fn is_entry(&self, addr: u32) -> bool {
        self.functions.binary_search_by_key(&addr, |f| f.entry).is_ok()
    }

    pub fn get(&self, entry: u32) -> Option<&Function> {
        self.functions
            .binary_search_by_key(&entry, |f| f.entry)
            .ok()
            .map(|i| &self.functions[i])
    }

    /// The function whose body covers `addr`.
    pub fn containing(&self, addr: u32) -> Option<&Function> {
        let i = self.functions.partition_point(|f| f.entry <= addr);
        let f = self.functions.get(i.checked_sub(1)?)?;
        f.contains(addr).then_some(f)
    }
}

/// Function entries are the disassembly seeds, `BL` targets, `PUSH {.., lr}`
/// sites, and `SUB SP` frame setups that are not reached by fallthrough.
/// A body is every decoded instruction from its entry up to the next entry.
pub fn identify_functions(index: &InstrIndex) -> FunctionSet {
    let mut entries: BTreeSet<u32> = index
        .entry_points()
        .iter()
        .chain(index.call_targets())
        .copied()
        .filter(|&a| index.contains(a))
        .collect();
    let mut prev_falls_into: Option<u64> = None;
    for ins in index.iter() {
        let fallthrough = prev_falls_into == Some(ins.addr as u64);
        match ins.kind {
            Kind::Push(list) if list & (1 << LR) != 0 => {
                entries.insert(ins.addr);
            }
            Kind::SubSp(_) if !fallthrough => {
                entries.insert(ins.addr);
            }
            _ => {}
        }
        prev_falls_into = (!ins.kind.ends_path()).then(|| ins.end());
    }

    let starts: Vec<u32> = entries.into_iter().collect();
    let mut functions = Vec::with_capacity(starts.len());
    for (i, &entry) in starts.iter().enumerate() {
        let limit = starts.get(i + 1).map_or(u64::MAX, |&n| n as u64);
        let mut ranges: Vec<(u32, u64)> = Vec::new();
        for ins in index.range(entry, limit) {
            match ranges.last_mut() {
                Some(r) if r.1 == ins.addr as u64 => r.1 = ins.end(),
                _ => ranges.push((ins.addr, ins.end())),
            }
        }
        functions.push(Function { entry, ranges });
    }
    FunctionSet { functions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disasm::{disassemble, CodeView, DisasmOptions};

    fn run(hws: &[u16], entries: &[u32]) -> FunctionSet {
        let bytes: Vec<u8> = hws.iter().flat_map(|h| h.to_le_bytes()).collect();
        let idx = disassemble(
            &CodeView::new(0, &bytes),
            entries.iter().copied(),
            &DisasmOptions::default(),
        );
        identify_functions(&idx)
    }

    #[test]
    fn bl_target_and_push_prologue() {
        // 0: bl 8 ; 4: b . (self loop)  ; 6: pad ; 8: push {r4,lr} ; a: sub sp,#8 ; c: pop {r4,pc}
        let f = run(&[0xF000, 0xF802, 0xE7FE, 0xBF00, 0xB510, 0xB082, 0xBD10], &[0]);
        let entries: Vec<u32> = f.entries().collect();
        assert_eq!(entries, vec![0, 8]);
        assert_eq!(f.containing(0xC).unwrap().entry, 8);
    }

    #[test]
    fn empty_index_has_no_functions() {
        assert!(identify_functions(&InstrIndex::default()).is_empty());
    }
}
