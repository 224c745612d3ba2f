use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::decode::{decode_one, CodeView, DecodeError, Instr, Kind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisasmOptions {
    /// Treat odd in-image words loaded by `LDR Rt, [pc, #imm]` as additional
    /// entry points.
    pub follow_literal_pointers: bool,
    /// Hard cap on decoded instructions.
    pub max_instructions: usize,
}

impl Default for DisasmOptions {
    fn default() -> Self {
        DisasmOptions {
            follow_literal_pointers: true,
            max_instructions: 1 << 22,
        }
    }
}

/// Instructions reached from a set of entry points, keyed by address.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstrIndex {
    instrs: BTreeMap<u32, Instr>,
    entry_points: BTreeSet<u32>,
    branch_targets: BTreeSet<u32>,
    call_targets: BTreeSet<u32>,
    data: BTreeMap<u32, u32>,
    exhausted: bool,
}

impl InstrIndex {
    pub fn get(&self, addr: u32) -> Option<&Instr> {
        self.instrs.get(&addr)
    }

    pub fn contains(&self, addr: u32) -> bool {
        self.instrs.contains_key(&addr)
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// All instructions in address order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Instr> + '_ {
        self.instrs.values()
    }

    /// Instructions strictly after `addr`, in address order.
    pub fn after(&self, addr: u32) -> impl Iterator<Item = &Instr> + '_ {
        self.instrs
            .range((std::ops::Bound::Excluded(addr), std::ops::Bound::Unbounded))
            .map(|(_, i)| i)
    }

    /// Instructions strictly before `addr`, nearest first.
    pub fn before(&self, addr: u32) -> impl Iterator<Item = &Instr> + '_ {
        self.instrs.range(..addr).rev().map(|(_, i)| i)
    }

    pub fn range(&self, start: u32, end: u64) -> impl Iterator<Item = &Instr> + '_ {
        let end = end.min(u32::MAX as u64 + 1);
        self.instrs
            .range(start..)
            .take_while(move |(&a, _)| (a as u64) < end)
            .map(|(_, i)| i)
    }

    /// Seeds plus odd literal-pool pointers that were followed.
    pub fn entry_points(&self) -> &BTreeSet<u32> {
        &self.entry_points
    }

    /// Targets of every decoded direct branch or call.
    pub fn branch_targets(&self) -> &BTreeSet<u32> {
        &self.branch_targets
    }

    /// Targets of decoded `BL`.
    pub fn call_targets(&self) -> &BTreeSet<u32> {
        &self.call_targets
    }

    /// Word addresses read by PC-relative literal loads.
    pub fn literal_words(&self) -> impl Iterator<Item = u32> + '_ {
        self.data.keys().copied()
    }

    /// Value of the literal word at `addr`, if a literal load reads it.
    pub fn literal_value(&self, addr: u32) -> Option<u32> {
        self.data.get(&addr).copied()
    }

    /// Whether `addr` falls inside a literal word.
    pub fn is_literal(&self, addr: u32) -> bool {
        self.data
            .range(..=addr)
            .next_back()
            .is_some_and(|(&w, _)| addr - w < 4)
    }

    /// Whether the worklist drained before hitting the instruction cap.
    pub fn exhausted(&self) -> bool {
        self.exhausted
    }
}

struct Walk<'a, 'c> {
    code: &'a CodeView<'c>,
    opts: &'a DisasmOptions,
    blocked: &'a BTreeSet<u32>,
    index: InstrIndex,
    owner: HashMap<u32, u32>,
    work: Vec<u32>,
}

impl Walk<'_, '_> {
    fn halfword_blocked(&self, hw: u32) -> bool {
        self.blocked.contains(&hw) || self.blocked.contains(&hw.wrapping_sub(2))
    }

    fn push(&mut self, addr: u32) {
        if self.code.contains(addr) && addr & 1 == 0 && !self.index.instrs.contains_key(&addr) {
            self.work.push(addr);
        }
    }

    fn run(&mut self) {
        while let Some(start) = self.work.pop() {
            let mut pc = start;
            loop {
                if self.index.instrs.len() >= self.opts.max_instructions {
                    self.index.exhausted = false;
                    return;
                }
                if self.owner.contains_key(&pc) || self.halfword_blocked(pc) {
                    break;
                }
                let ins = match decode_one(self.code, pc) {
                    Ok(i) => i,
                    Err(DecodeError::OutOfBounds(_) | DecodeError::Misaligned(_)) => break,
                };
                if ins.width == 4 {
                    let second = pc.wrapping_add(2);
                    if self.owner.contains_key(&second) || self.halfword_blocked(second) {
                        break;
                    }
                    self.owner.insert(second, pc);
                }
                self.owner.insert(pc, pc);
                self.index.instrs.insert(pc, ins);
                self.follow(&ins);
                if ins.kind.ends_path() {
                    break;
                }
                pc = ins.next_addr();
                if !self.code.contains(pc) {
                    break;
                }
            }
        }
        self.index.exhausted = true;
    }

    fn follow(&mut self, ins: &Instr) {
        match ins.kind {
            Kind::Bl(t) => {
                self.index.branch_targets.insert(t);
                self.index.call_targets.insert(t);
                self.push(t);
            }
            Kind::B(t) | Kind::Bcond(t) => {
                self.index.branch_targets.insert(t);
                self.push(t);
            }
            Kind::LdrLiteral { target, .. } => {
                if let Some(v) = self.code.read_u32(target) {
                    self.index.data.insert(target, v);
                }
                if self.opts.follow_literal_pointers {
                    if let Some(w) = self.code.read_u32(target) {
                        let dest = w & !1;
                        if w & 1 == 1 && self.code.contains(dest) {
                            self.index.entry_points.insert(dest);
                            self.push(dest);
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

/// Recursive-descent disassembly from `entries` (Thumb bit already
/// stripped). Words read by literal loads are never decoded as code: if a
/// pass decodes over one, the walk is repeated with those words blocked.
pub fn disassemble(
    code: &CodeView<'_>,
    entries: impl IntoIterator<Item = u32>,
    opts: &DisasmOptions,
) -> InstrIndex {
    let seeds: BTreeSet<u32> = entries
        .into_iter()
        .filter(|&a| a & 1 == 0 && code.contains(a))
        .collect();
    let mut blocked = BTreeSet::new();
    loop {
        let mut walk = Walk {
            code,
            opts,
            blocked: &blocked,
            index: InstrIndex {
                entry_points: seeds.clone(),
                ..Default::default()
            },
            owner: HashMap::new(),
            work: seeds.iter().rev().copied().collect(),
        };
        walk.run();
        let index = walk.index;
        let owner = walk.owner;
        let clash: Vec<u32> = index
            .literal_words()
            .filter(|&w| !blocked.contains(&w))
            .filter(|&w| owner.contains_key(&w) || owner.contains_key(&w.wrapping_add(2)))
            .collect();
        if clash.is_empty() || !index.exhausted {
            return index;
        }
        log::debug!("re-walking with {} literal words blocked", clash.len());
        blocked.extend(clash);
    }
}
