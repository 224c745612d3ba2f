//! Single-instruction Thumb/Thumb-2 decoding for the subset the detectors
//! consume. Everything else is either [`Kind::Other`] (recognized, falls
//! through, no semantics) or [`Kind::Unknown`] (stops the path).

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SP: u8 = 13;
pub const LR: u8 = 14;
pub const PC: u8 = 15;

const ALL_REGS: u16 = 0xFFFF;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    #[error("address {0:#010x} is outside the image")]
    OutOfBounds(u32),
    #[error("address {0:#010x} is not halfword aligned")]
    Misaligned(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TtVariant {
    Tt,
    Ttt,
    Tta,
    Ttat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    MsrSpecial { sysm: u8, rn: u8 },
    MrsSpecial { rd: u8, sysm: u8 },
    Svc(u8),
    Isb,
    Dsb,
    Dmb,
    /// `CPSID`/`CPSIE`; `disable` is the IM bit.
    Cps { disable: bool, i: bool, f: bool },
    Bl(u32),
    Blx(u8),
    B(u32),
    /// Conditional branch, including CBZ/CBNZ.
    Bcond(u32),
    Bx(u8),
    Push(u16),
    Pop(u16),
    LdrLiteral { rt: u8, target: u32 },
    MovImm { rd: u8, imm: u32 },
    Movt { rd: u8, imm16: u16 },
    OrrImm { rd: u8, rn: u8, imm: u32 },
    StrImm { rt: u8, rn: u8, off: i32 },
    LdrImm { rt: u8, rn: u8, off: i32 },
    StrT { rt: u8, rn: u8, off: u8 },
    LdrT { rt: u8, rn: u8, off: u8 },
    Sg,
    Bxns(u8),
    Blxns(u8),
    Tt { variant: TtVariant, rd: u8, rn: u8 },
    /// `SUB SP, SP, #imm` frame allocation.
    SubSp(u32),
    /// Decoded but outside the modeled subset; falls through.
    Other,
    Unknown,
}

impl Kind {
    /// Whether execution never continues at the next address.
    pub fn ends_path(&self) -> bool {
        match self {
            Kind::B(_) | Kind::Bx(_) | Kind::Blx(_) | Kind::Bxns(_) | Kind::Unknown => true,
            Kind::Pop(list) => list & (1 << PC) != 0,
            _ => false,
        }
    }

    /// Direct branch or call target, if any.
    pub fn branch_target(&self) -> Option<u32> {
        match *self {
            Kind::Bl(t) | Kind::B(t) | Kind::Bcond(t) => Some(t),
            _ => None,
        }
    }
}

/// One decoded instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instr {
    pub addr: u32,
    pub width: u8,
    pub kind: Kind,
    raw: [u8; 4],
    /// Registers possibly written, one bit per register.
    pub defs: u16,
}

impl Instr {
    pub fn raw(&self) -> &[u8] {
        &self.raw[..self.width as usize]
    }

    pub fn end(&self) -> u64 {
        self.addr as u64 + self.width as u64
    }

    pub fn next_addr(&self) -> u32 {
        self.addr.wrapping_add(self.width as u32)
    }

    pub fn writes(&self, reg: u8) -> bool {
        self.defs & (1 << reg) != 0
    }
}

/// 4 iff bits[15:11] of the first halfword are 0b11101, 0b11110 or 0b11111.
pub fn instr_width(hw: u16) -> u8 {
    match hw >> 11 {
        0b11101..=0b11111 => 4,
        _ => 2,
    }
}

/// Byte slice addressed from `base`.
#[derive(Debug, Clone, Copy)]
pub struct CodeView<'a> {
    pub base: u32,
    pub bytes: &'a [u8],
}

impl<'a> CodeView<'a> {
    pub fn new(base: u32, bytes: &'a [u8]) -> Self {
        CodeView { base, bytes }
    }

    pub fn end(&self) -> u64 {
        self.base as u64 + self.bytes.len() as u64
    }

    pub fn contains(&self, addr: u32) -> bool {
        addr >= self.base && (addr as u64) < self.end()
    }

    pub fn read_u16(&self, addr: u32) -> Option<u16> {
        let off = addr.checked_sub(self.base)? as usize;
        let b = self.bytes.get(off..off.checked_add(2)?)?;
        Some(u16::from_le_bytes([b[0], b[1]]))
    }

    pub fn read_u32(&self, addr: u32) -> Option<u32> {
        let off = addr.checked_sub(self.base)? as usize;
        let b = self.bytes.get(off..off.checked_add(4)?)?;
        Some(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn slice(&self, start: u32, end: u64) -> &'a [u8] {
        let lo = (start.saturating_sub(self.base) as usize).min(self.bytes.len());
        let hi = (end.saturating_sub(self.base as u64) as usize).clamp(lo, self.bytes.len());
        &self.bytes[lo..hi]
    }
}

/// Decode the instruction at `addr`.
pub fn decode_one(code: &CodeView<'_>, addr: u32) -> Result<Instr, DecodeError> {
    if addr & 1 != 0 {
        return Err(DecodeError::Misaligned(addr));
    }
    let hw1 = code.read_u16(addr).ok_or(DecodeError::OutOfBounds(addr))?;
    if instr_width(hw1) == 2 {
        return Ok(decode_halfwords(addr, hw1, 0));
    }
    let hw2 = code
        .read_u16(addr.wrapping_add(2))
        .filter(|_| addr <= u32::MAX - 3)
        .ok_or(DecodeError::OutOfBounds(addr))?;
    Ok(decode_halfwords(addr, hw1, hw2))
}

/// Decode from raw halfwords; `hw2` is ignored for 16-bit encodings.
pub fn decode_halfwords(addr: u32, hw1: u16, hw2: u16) -> Instr {
    let width = instr_width(hw1);
    let (kind, defs) = if width == 2 {
        decode16(addr, hw1)
    } else {
        decode32(addr, hw1, hw2)
    };
    let mut raw = [0u8; 4];
    raw[..2].copy_from_slice(&hw1.to_le_bytes());
    if width == 4 {
        raw[2..].copy_from_slice(&hw2.to_le_bytes());
    }
    let defs = match kind {
        Kind::Unknown => ALL_REGS,
        _ => defs,
    };
    Instr {
        addr,
        width,
        kind,
        raw,
        defs,
    }
}

fn bit(v: u16, n: u32) -> bool {
    (v >> n) & 1 != 0
}

fn r(v: u16, lo: u32) -> u8 {
    ((v >> lo) & 0xF) as u8
}

fn r3(v: u16, lo: u32) -> u8 {
    ((v >> lo) & 0x7) as u8
}

fn sign_extend(v: u32, bits: u32) -> i32 {
    let shift = 32 - bits;
    ((v << shift) as i32) >> shift
}

fn rel(addr: u32, off: i32) -> u32 {
    addr.wrapping_add(4).wrapping_add(off as u32)
}

fn literal_base(addr: u32) -> u32 {
    addr.wrapping_add(4) & !3
}

fn reg_bit(reg: u8) -> u16 {
    1 << reg
}

/// ThumbExpandImm for the 12-bit `i:imm3:imm8` field.
pub fn thumb_expand_imm(imm12: u32) -> u32 {
    let imm8 = imm12 & 0xFF;
    if imm12 >> 10 == 0 {
        match (imm12 >> 8) & 3 {
            0 => imm8,
            1 => (imm8 << 16) | imm8,
            2 => (imm8 << 24) | (imm8 << 8),
            _ => imm8 * 0x0101_0101,
        }
    } else {
        let unrotated = 0x80 | (imm12 & 0x7F);
        unrotated.rotate_right(imm12 >> 7)
    }
}

fn decode16(addr: u32, hw: u16) -> (Kind, u16) {
    let low3 = reg_bit(r3(hw, 0));
    match hw >> 11 {
        // LSL/LSR/ASR imm, ADD/SUB reg/imm3
        0b00000..=0b00011 => (Kind::Other, low3),
        // MOVS imm8
        0b00100 => {
            let rd = r3(hw, 8);
            (
                Kind::MovImm {
                    rd,
                    imm: (hw & 0xFF) as u32,
                },
                reg_bit(rd),
            )
        }
        // CMP imm8
        0b00101 => (Kind::Other, 0),
        // ADDS/SUBS imm8
        0b00110 | 0b00111 => (Kind::Other, reg_bit(r3(hw, 8))),
        0b01000 => decode16_dp_special(hw),
        // LDR literal
        0b01001 => {
            let rt = r3(hw, 8);
            let target = literal_base(addr).wrapping_add(((hw & 0xFF) as u32) << 2);
            (Kind::LdrLiteral { rt, target }, reg_bit(rt))
        }
        // load/store register offset
        0b01010 | 0b01011 => {
            let opb = (hw >> 9) & 7;
            if opb <= 2 {
                (Kind::Other, 0)
            } else {
                (Kind::Other, low3)
            }
        }
        // STR/LDR imm5 word
        0b01100 | 0b01101 => {
            let rt = r3(hw, 0);
            let rn = r3(hw, 3);
            let off = (((hw >> 6) & 0x1F) << 2) as i32;
            if bit(hw, 11) {
                (Kind::LdrImm { rt, rn, off }, reg_bit(rt))
            } else {
                (Kind::StrImm { rt, rn, off }, 0)
            }
        }
        // STRB/LDRB/STRH/LDRH imm5
        0b01110..=0b10001 => {
            if bit(hw, 11) {
                (Kind::Other, low3)
            } else {
                (Kind::Other, 0)
            }
        }
        // STR/LDR SP-relative
        0b10010 | 0b10011 => {
            let rt = r3(hw, 8);
            let off = ((hw & 0xFF) << 2) as i32;
            if bit(hw, 11) {
                (Kind::LdrImm { rt, rn: SP, off }, reg_bit(rt))
            } else {
                (Kind::StrImm { rt, rn: SP, off }, 0)
            }
        }
        // ADR, ADD rd, SP, #imm
        0b10100 | 0b10101 => (Kind::Other, reg_bit(r3(hw, 8))),
        0b10110 | 0b10111 => decode16_misc(addr, hw),
        // STM
        0b11000 => (Kind::Other, reg_bit(r3(hw, 8))),
        // LDM
        0b11001 => (Kind::Other, (hw & 0xFF) | reg_bit(r3(hw, 8))),
        0b11010 | 0b11011 => {
            let cond = (hw >> 8) & 0xF;
            match cond {
                0xE => (Kind::Unknown, ALL_REGS),
                0xF => (Kind::Svc((hw & 0xFF) as u8), 0),
                _ => {
                    let off = sign_extend(((hw & 0xFF) as u32) << 1, 9);
                    (Kind::Bcond(rel(addr, off)), 0)
                }
            }
        }
        0b11100 => {
            let off = sign_extend(((hw & 0x7FF) as u32) << 1, 12);
            (Kind::B(rel(addr, off)), 0)
        }
        _ => unreachable!("32-bit prefix handled by caller"),
    }
}

fn decode16_dp_special(hw: u16) -> (Kind, u16) {
    if hw & 0xFC00 == 0x4000 {
        // TST, CMP, CMN set flags only
        return match (hw >> 6) & 0xF {
            0x8 | 0xA | 0xB => (Kind::Other, 0),
            _ => (Kind::Other, reg_bit(r3(hw, 0))),
        };
    }
    let rm = r(hw, 3);
    let rdn = ((hw >> 4) & 0x8) as u8 | r3(hw, 0);
    match (hw >> 8) & 0x3 {
        // ADD (high registers)
        0 if rdn == PC => (Kind::Unknown, ALL_REGS),
        0 => (Kind::Other, reg_bit(rdn)),
        // CMP (high registers)
        1 => (Kind::Other, 0),
        // MOV (high registers); MOV pc, Rm is an indirect branch
        2 if rdn == PC => (Kind::Bx(rm), 0),
        2 => (Kind::Other, reg_bit(rdn)),
        _ => match hw & 0xFF87 {
            0x4700 => (Kind::Bx(rm), 0),
            0x4780 => (Kind::Blx(rm), ALL_REGS),
            0x4704 => (Kind::Bxns(rm), 0),
            0x4784 => (Kind::Blxns(rm), ALL_REGS),
            _ => (Kind::Unknown, ALL_REGS),
        },
    }
}

fn decode16_misc(addr: u32, hw: u16) -> (Kind, u16) {
    match hw >> 8 {
        0xB0 => {
            let imm = ((hw & 0x7F) << 2) as u32;
            if bit(hw, 7) {
                (Kind::SubSp(imm), reg_bit(SP))
            } else {
                (Kind::Other, reg_bit(SP))
            }
        }
        0xB1 | 0xB3 | 0xB9 | 0xBB => {
            let imm = (((hw >> 9) & 1) << 6 | ((hw >> 3) & 0x1F) << 1) as u32;
            (Kind::Bcond(addr.wrapping_add(4).wrapping_add(imm)), 0)
        }
        // SXTH/SXTB/UXTH/UXTB, REV*
        0xB2 | 0xBA => (Kind::Other, reg_bit(r3(hw, 0))),
        0xB4 | 0xB5 => {
            let list = (hw & 0xFF) | if bit(hw, 8) { reg_bit(LR) } else { 0 };
            (Kind::Push(list), reg_bit(SP))
        }
        0xBC | 0xBD => {
            let list = (hw & 0xFF) | if bit(hw, 8) { reg_bit(PC) } else { 0 };
            (Kind::Pop(list), list | reg_bit(SP))
        }
        0xB6 if hw & 0xFFE8 == 0xB660 => (
            Kind::Cps {
                disable: bit(hw, 4),
                i: bit(hw, 1),
                f: bit(hw, 0),
            },
            0,
        ),
        // BKPT
        0xBE => (Kind::Other, 0),
        // IT blocks are not modeled; hints fall through
        0xBF if hw & 0xF != 0 => (Kind::Unknown, ALL_REGS),
        0xBF => (Kind::Other, 0),
        _ => (Kind::Unknown, ALL_REGS),
    }
}

fn decode32(addr: u32, hw1: u16, hw2: u16) -> (Kind, u16) {
    if hw1 == 0xFFFF {
        return (Kind::Unknown, ALL_REGS);
    }
    match hw1 >> 11 {
        0b11101 => decode32_e8(hw1, hw2),
        0b11110 if bit(hw2, 15) => decode32_branch_misc(addr, hw1, hw2),
        0b11110 => decode32_dp_imm(hw1, hw2),
        _ => decode32_f8(addr, hw1, hw2),
    }
}

fn decode32_e8(hw1: u16, hw2: u16) -> (Kind, u16) {
    if hw1 == 0xE97F && hw2 == 0xE97F {
        return (Kind::Sg, 0);
    }
    if hw1 & 0xFFF0 == 0xE840 && hw2 & 0xF03F == 0xF000 {
        let rd = r(hw2, 8);
        let variant = match (bit(hw2, 7), bit(hw2, 6)) {
            (false, false) => TtVariant::Tt,
            (false, true) => TtVariant::Ttt,
            (true, false) => TtVariant::Tta,
            (true, true) => TtVariant::Ttat,
        };
        return (
            Kind::Tt {
                variant,
                rd,
                rn: r(hw1, 0),
            },
            reg_bit(rd),
        );
    }
    // TBB/TBH
    if hw1 & 0xFFF0 == 0xE8D0 && hw2 & 0xFFE0 == 0xF000 {
        return (Kind::Unknown, ALL_REGS);
    }
    if hw1 == 0xE92D {
        return (Kind::Push(hw2), reg_bit(SP));
    }
    if hw1 == 0xE8BD {
        return (Kind::Pop(hw2), hw2 | reg_bit(SP));
    }
    match hw1 >> 9 {
        // load/store multiple: LDM with PC in the list writes the PC
        0b1110100 => {
            let op = (hw1 >> 7) & 3;
            let load = bit(hw1, 4);
            if (op == 1 || op == 2) && load {
                if bit(hw2, 15) {
                    return (Kind::Unknown, ALL_REGS);
                }
                return (Kind::Other, hw2 | reg_bit(r(hw1, 0)));
            }
            // LDRD/LDREX and friends, STRD/STREX
            (Kind::Other, ALL_REGS)
        }
        // data processing (shifted register)
        0b1110101 => {
            let rd = r(hw2, 8);
            if rd == PC {
                if bit(hw1, 4) {
                    (Kind::Other, 0)
                } else {
                    (Kind::Unknown, ALL_REGS)
                }
            } else {
                (Kind::Other, reg_bit(rd))
            }
        }
        // coprocessor / floating point
        _ => (Kind::Other, ALL_REGS),
    }
}

fn decode32_dp_imm(hw1: u16, hw2: u16) -> (Kind, u16) {
    let rd = r(hw2, 8);
    let rn = r(hw1, 0);
    let imm12 = (((hw1 >> 10) & 1) << 11 | ((hw2 >> 12) & 7) << 8 | (hw2 & 0xFF)) as u32;
    if !bit(hw1, 9) {
        // modified immediate
        let imm = thumb_expand_imm(imm12);
        let op = (hw1 >> 5) & 0xF;
        let setflags = bit(hw1, 4);
        if rd == PC {
            // TST/TEQ/CMP/CMN with Rd = 15
            return if setflags {
                (Kind::Other, 0)
            } else {
                (Kind::Unknown, ALL_REGS)
            };
        }
        let kind = match (op, rn) {
            (0b0010, PC) => Kind::MovImm { rd, imm },
            (0b0010, _) => Kind::OrrImm { rd, rn, imm },
            (0b0011, PC) => Kind::MovImm { rd, imm: !imm },
            (0b1101, SP) if rd == SP && !setflags => Kind::SubSp(imm),
            _ => Kind::Other,
        };
        return (kind, reg_bit(rd));
    }
    // plain binary immediate
    if rd == PC {
        return (Kind::Unknown, ALL_REGS);
    }
    let imm16 = ((r(hw1, 0) as u32) << 12) | imm12;
    let kind = match hw1 & 0xFBF0 {
        0xF240 => Kind::MovImm { rd, imm: imm16 },
        0xF2C0 => Kind::Movt {
            rd,
            imm16: imm16 as u16,
        },
        0xF2A0 if rn == SP && rd == SP => Kind::SubSp(imm12),
        _ => Kind::Other,
    };
    (kind, reg_bit(rd))
}

fn decode32_branch_misc(addr: u32, hw1: u16, hw2: u16) -> (Kind, u16) {
    let s = ((hw1 >> 10) & 1) as u32;
    let j1 = ((hw2 >> 13) & 1) as u32;
    let j2 = ((hw2 >> 11) & 1) as u32;
    let imm11 = (hw2 & 0x7FF) as u32;
    match hw2 & 0xD000 {
        0xD000 | 0x9000 => {
            let i1 = !(j1 ^ s) & 1;
            let i2 = !(j2 ^ s) & 1;
            let imm10 = (hw1 & 0x3FF) as u32;
            let raw = (s << 24) | (i1 << 23) | (i2 << 22) | (imm10 << 12) | (imm11 << 1);
            let target = rel(addr, sign_extend(raw, 25));
            if hw2 & 0xD000 == 0xD000 {
                (Kind::Bl(target), reg_bit(LR) | 0x000F | reg_bit(12))
            } else {
                (Kind::B(target), 0)
            }
        }
        // BLX imm switches to ARM state, which M-profile lacks
        0xC000 => (Kind::Unknown, ALL_REGS),
        _ => {
            let cond = (hw1 >> 6) & 0xF;
            if cond < 0xE {
                let imm6 = (hw1 & 0x3F) as u32;
                let raw = (s << 20) | (j2 << 19) | (j1 << 18) | (imm6 << 12) | (imm11 << 1);
                return (Kind::Bcond(rel(addr, sign_extend(raw, 21))), 0);
            }
            decode32_system(hw1, hw2)
        }
    }
}

fn decode32_system(hw1: u16, hw2: u16) -> (Kind, u16) {
    match hw1 & 0xFFF0 {
        0xF380 if hw2 & 0x3000 == 0 => (
            Kind::MsrSpecial {
                sysm: (hw2 & 0xFF) as u8,
                rn: r(hw1, 0),
            },
            0,
        ),
        0xF3A0 if hw1 == 0xF3AF => (Kind::Other, 0),
        0xF3B0 if hw1 == 0xF3BF => match hw2 & 0xFFF0 {
            0x8F40 => (Kind::Dsb, 0),
            0x8F50 => (Kind::Dmb, 0),
            0x8F60 => (Kind::Isb, 0),
            0x8F20 => (Kind::Other, 0),
            _ => (Kind::Unknown, ALL_REGS),
        },
        0xF3E0 if hw2 & 0x3000 == 0 => {
            let rd = r(hw2, 8);
            (
                Kind::MrsSpecial {
                    rd,
                    sysm: (hw2 & 0xFF) as u8,
                },
                reg_bit(rd),
            )
        }
        _ => (Kind::Unknown, ALL_REGS),
    }
}

fn decode32_f8(addr: u32, hw1: u16, hw2: u16) -> (Kind, u16) {
    let rt = r(hw2, 12);
    let rn = r(hw1, 0);
    if hw1 & 0xFE00 == 0xF800 {
        let load = bit(hw1, 4);
        let size = (hw1 >> 5) & 3;
        let word = size == 2;
        let pc_write = |k: Kind| {
            if load && rt == PC {
                (Kind::Unknown, ALL_REGS)
            } else {
                k_defs(k, load, rt)
            }
        };
        // PLD/PLI hints
        if load && !word && rt == PC {
            return (Kind::Other, 0);
        }
        // literal forms
        if rn == PC && load {
            if !word {
                return (Kind::Other, reg_bit(rt));
            }
            let imm12 = (hw2 & 0xFFF) as u32;
            let base = literal_base(addr);
            let target = if bit(hw1, 7) {
                base.wrapping_add(imm12)
            } else {
                base.wrapping_sub(imm12)
            };
            return pc_write(Kind::LdrLiteral { rt, target });
        }
        if rn == PC {
            return (Kind::Unknown, ALL_REGS);
        }
        if bit(hw1, 8) {
            // signed loads
            return if load {
                pc_write(Kind::Other)
            } else {
                (Kind::Unknown, ALL_REGS)
            };
        }
        if bit(hw1, 7) {
            // T3: positive imm12
            let off = (hw2 & 0xFFF) as i32;
            let k = match (word, load) {
                (true, true) => Kind::LdrImm { rt, rn, off },
                (true, false) => Kind::StrImm { rt, rn, off },
                _ => Kind::Other,
            };
            return pc_write(k);
        }
        if bit(hw2, 11) {
            let imm8 = (hw2 & 0xFF) as u8;
            let p = bit(hw2, 10);
            let u = bit(hw2, 9);
            let w = bit(hw2, 8);
            if p && u && !w {
                // unprivileged variants
                let k = match (word, load) {
                    (true, true) => Kind::LdrT { rt, rn, off: imm8 },
                    (true, false) => Kind::StrT { rt, rn, off: imm8 },
                    _ => Kind::Other,
                };
                return pc_write(k);
            }
            if p && !w {
                let off = if u { imm8 as i32 } else { -(imm8 as i32) };
                let k = match (word, load) {
                    (true, true) => Kind::LdrImm { rt, rn, off },
                    (true, false) => Kind::StrImm { rt, rn, off },
                    _ => Kind::Other,
                };
                return pc_write(k);
            }
            if !p && !w {
                return (Kind::Unknown, ALL_REGS);
            }
            // single-register push/pop
            if word && rn == SP && imm8 == 4 {
                if !load && p && !u {
                    return (Kind::Push(reg_bit(rt)), reg_bit(SP));
                }
                if load && !p && u {
                    return (Kind::Pop(reg_bit(rt)), reg_bit(rt) | reg_bit(SP));
                }
            }
            if load && rt == PC {
                return (Kind::Unknown, ALL_REGS);
            }
            let wb = reg_bit(rn);
            return (Kind::Other, if load { wb | reg_bit(rt) } else { wb });
        }
        if hw2 & 0x0FC0 == 0 {
            // register offset
            return pc_write(Kind::Other);
        }
        return (Kind::Unknown, ALL_REGS);
    }
    match hw1 >> 8 {
        // data processing (register), multiply
        0xFA | 0xFB if hw1 & 0xFF80 == 0xFB80 => (Kind::Other, reg_bit(rt) | reg_bit(r(hw2, 8))),
        0xFA | 0xFB => {
            let rd = r(hw2, 8);
            if rd == PC {
                (Kind::Unknown, ALL_REGS)
            } else {
                (Kind::Other, reg_bit(rd))
            }
        }
        // coprocessor, floating point
        _ => (Kind::Other, ALL_REGS),
    }
}

fn k_defs(k: Kind, load: bool, rt: u8) -> (Kind, u16) {
    (k, if load { reg_bit(rt) } else { 0 })
}
