use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::constprop::const_value_at;
use super::functions::FunctionSet;
use crate::disasm::{InstrIndex, Kind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Call,
    IndirectCall,
    TailCall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallEdge {
    pub caller: u32,
    pub callee: u32,
    /// Address of the branch instruction.
    pub site: u32,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    nodes: BTreeSet<u32>,
    edges: BTreeSet<CallEdge>,
    callees: BTreeMap<u32, BTreeSet<u32>>,
    callers: BTreeMap<u32, BTreeSet<u32>>,
    reachable: BTreeSet<u32>,
    root: Option<u32>,
}

impl CallGraph {
    pub fn nodes(&self) -> &BTreeSet<u32> {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = &CallEdge> + '_ {
        self.edges.iter()
    }

    pub fn has_edge(&self, caller: u32, callee: u32) -> bool {
        self.callees.get(&caller).is_some_and(|s| s.contains(&callee))
    }

    pub fn callers_of(&self, f: u32) -> impl Iterator<Item = u32> + '_ {
        self.callers.get(&f).into_iter().flatten().copied()
    }

    pub fn callees_of(&self, f: u32) -> impl Iterator<Item = u32> + '_ {
        self.callees.get(&f).into_iter().flatten().copied()
    }

    pub fn root(&self) -> Option<u32> {
        self.root
    }

    /// Reachable from the reset function, or called by at least one function.
    pub fn in_call_tree(&self, f: u32) -> bool {
        self.reachable.contains(&f) || self.callers.get(&f).is_some_and(|s| !s.is_empty())
    }
}

/// Edges come from `BL`, `BLX Rm` with a resolvable constant target, and `B`
/// to another function's entry (tail call).
pub fn build_call_graph(funcs: &FunctionSet, index: &InstrIndex, reset: Option<u32>) -> CallGraph {
    let mut g = CallGraph {
        nodes: funcs.entries().collect(),
        ..Default::default()
    };
    for f in funcs.iter() {
        for &(s, e) in &f.ranges {
            for ins in index.range(s, e) {
                let (callee, kind) = match ins.kind {
                    Kind::Bl(t) => (t, EdgeKind::Call),
                    Kind::Blx(rm) => match const_value_at(index, ins.addr, rm) {
                        Some(v) if v & 1 == 1 => (v & !1, EdgeKind::IndirectCall),
                        _ => continue,
                    },
                    Kind::B(t) if t != f.entry && !f.contains(t) => (t, EdgeKind::TailCall),
                    _ => continue,
                };
                if !g.nodes.contains(&callee) {
                    continue;
                }
                g.edges.insert(CallEdge {
                    caller: f.entry,
                    callee,
                    site: ins.addr,
                    kind,
                });
                g.callees.entry(f.entry).or_default().insert(callee);
                g.callers.entry(callee).or_default().insert(f.entry);
            }
        }
    }
    g.root = reset.filter(|r| g.nodes.contains(r));
    if let Some(root) = g.root {
        let mut queue = VecDeque::from([root]);
        g.reachable.insert(root);
        while let Some(n) = queue.pop_front() {
            let next: Vec<u32> = g.callees_of(n).collect();
            for c in next {
                if g.reachable.insert(c) {
                    queue.push_back(c);
                }
            }
        }
    }
    g
}
