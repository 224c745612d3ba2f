//! Backward constant propagation inside a basic block.

use crate::disasm::{InstrIndex, Instr, Kind};

/// Instructions scanned backwards from a use.
pub const WINDOW: usize = 16;

/// The straight-line window preceding `addr`, nearest first. The window
/// stops at a gap, at a path terminator, at the window limit, and after any
/// instruction that is itself a branch target or entry point (control may
/// arrive there from elsewhere). If `addr` itself is a join point the
/// window is empty.
fn window(index: &InstrIndex, addr: u32) -> Vec<&Instr> {
    let is_leader =
        |a: u32| index.branch_targets().contains(&a) || index.entry_points().contains(&a);
    let mut out = Vec::new();
    if is_leader(addr) {
        return out;
    }
    let mut next = addr;
    for ins in index.before(addr) {
        if out.len() == WINDOW || ins.end() != next as u64 || ins.kind.ends_path() {
            break;
        }
        out.push(ins);
        if is_leader(ins.addr) {
            break;
        }
        next = ins.addr;
    }
    out
}

fn eval(index: &InstrIndex, win: &[&Instr], reg: u8) -> Option<u32> {
    let (pos, def) = win.iter().enumerate().find(|(_, i)| i.writes(reg))?;
    let rest = &win[pos + 1..];
    match def.kind {
        Kind::MovImm { rd, imm } if rd == reg => Some(imm),
        Kind::Movt { rd, imm16 } if rd == reg => {
            let low = eval(index, rest, reg)?;
            Some(((imm16 as u32) << 16) | (low & 0xFFFF))
        }
        Kind::OrrImm { rd, rn, imm } if rd == reg => Some(eval(index, rest, rn)? | imm),
        Kind::LdrLiteral { rt, target } if rt == reg => index.literal_value(target),
        _ => None,
    }
}

/// Value of `reg` as read by the instruction at `addr`, if it is a
/// compile-time constant within the block.
pub fn const_value_at(index: &InstrIndex, addr: u32, reg: u8) -> Option<u32> {
    eval(index, &window(index, addr), reg)
}

/// Value of `reg` right after the instruction at `addr` executes.
pub fn const_value_after(index: &InstrIndex, addr: u32, reg: u8) -> Option<u32> {
    let ins = index.get(addr)?;
    let mut win = vec![ins];
    if !(index.branch_targets().contains(&addr) || index.entry_points().contains(&addr)) {
        win.extend(window(index, addr).into_iter().take(WINDOW - 1));
    }
    eval(index, &win, reg)
}

/// Nearest in-window definition of `reg` before `addr`.
pub fn reaching_def(index: &InstrIndex, addr: u32, reg: u8) -> Option<&Instr> {
    window(index, addr).into_iter().find(|i| i.writes(reg))
}

/// Resolve `rn + off` for a load/store at `addr`.
pub fn effective_address(index: &InstrIndex, addr: u32, rn: u8, off: i32) -> Option<u32> {
    const_value_at(index, addr, rn).map(|b| b.wrapping_add(off as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disasm::{disassemble, CodeView, DisasmOptions};

    fn index_of(hws: &[u16]) -> InstrIndex {
        let bytes: Vec<u8> = hws.iter().flat_map(|h| h.to_le_bytes()).collect();
        let code = CodeView::new(0, Box::leak(bytes.into_boxed_slice()));
        disassemble(&code, [0], &DisasmOptions::default())
    }

    #[test]
    fn single_movs() {
        // movs r0,#3 ; msr CONTROL,r0 ; bx lr
        let idx = index_of(&[0x2003, 0xF380, 0x8814, 0x4770]);
        assert_eq!(const_value_at(&idx, 2, 0), Some(3));
    }

    #[test]
    fn movw_movt_compose() {
        // movw r0,#0x5678 ; movt r0,#0x1234 ; bx lr
        let idx = index_of(&[0xF245, 0x6078, 0xF2C1, 0x2034, 0x4770]);
        assert_eq!(const_value_at(&idx, 8, 0), Some(0x1234_5678));
        assert_eq!(const_value_after(&idx, 4, 0), Some(0x1234_5678));
    }

    #[test]
    fn unknown_alu_def_bails() {
        // movs r0,#1 ; adds r0,#1 ; bx lr
        let idx = index_of(&[0x2001, 0x3001, 0x4770]);
        assert_eq!(const_value_at(&idx, 4, 0), None);
        // unrelated def leaves r0 alone: movs r0,#1 ; movs r1,#2 ; bx lr
        let idx = index_of(&[0x2001, 0x2102, 0x4770]);
        assert_eq!(const_value_at(&idx, 4, 0), Some(1));
    }

    #[test]
    fn branch_target_restarts_window() {
        // 0: movs r0,#1 ; 2: cbz r1, 6 ; 4: movs r0,#2 ; 6: msr CONTROL,r0 ; 10: bx lr
        let idx = index_of(&[0x2001, 0xB101, 0x2002, 0xF380, 0x8814, 0x4770]);
        assert!(idx.branch_targets().contains(&6));
        assert_eq!(const_value_at(&idx, 6, 0), None);
    }

    #[test]
    fn orr_on_known_value() {
        // movs r0,#2 ; orr r0, r0, #1 ; bx lr
        let idx = index_of(&[0x2002, 0xF040, 0x0001, 0x4770]);
        assert_eq!(const_value_at(&idx, 6, 0), Some(3));
    }
}
