//! A small label-aware Thumb/Thumb-2 assembler.
//!
//! Only the encodings needed to synthesize Cortex-M firmware for tests are
//! supported. Every instruction has an explicit width chosen by the caller, so
//! label addresses are known at emission time and branch/literal offsets are
//! patched in a single fixup pass by [`Asm::finish`].
//!
//! The encoders here are written directly from the Armv7-M/Armv8-M encoding
//! tables and are checked against bytes produced by an external assembler; they
//! share no code with the decoder under test.

use std::collections::BTreeMap;
use std::fmt;

pub mod corpus;

pub const R0: u8 = 0;
pub const R1: u8 = 1;
pub const R2: u8 = 2;
pub const R3: u8 = 3;
pub const R4: u8 = 4;
pub const R5: u8 = 5;
pub const R6: u8 = 6;
pub const R7: u8 = 7;
pub const R8: u8 = 8;
pub const R9: u8 = 9;
pub const R10: u8 = 10;
pub const R11: u8 = 11;
pub const R12: u8 = 12;
pub const SP: u8 = 13;
pub const LR: u8 = 14;
pub const PC: u8 = 15;

/// Special-register selectors for MSR/MRS.
pub mod sysm {
    pub const MSP: u8 = 0x08;
    pub const PSP: u8 = 0x09;
    pub const MSPLIM: u8 = 0x0A;
    pub const PSPLIM: u8 = 0x0B;
    pub const PRIMASK: u8 = 0x10;
    pub const BASEPRI: u8 = 0x11;
    pub const CONTROL: u8 = 0x14;
    pub const MSP_NS: u8 = 0x88;
    pub const PSP_NS: u8 = 0x89;
    pub const MSPLIM_NS: u8 = 0x8A;
    pub const PSPLIM_NS: u8 = 0x8B;
    pub const CONTROL_NS: u8 = 0x94;
}

/// Condition codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cond {
    Eq = 0,
    Ne = 1,
    Cs = 2,
    Cc = 3,
    Mi = 4,
    Pl = 5,
    Vs = 6,
    Vc = 7,
    Hi = 8,
    Ls = 9,
    Ge = 10,
    Lt = 11,
    Gt = 12,
    Le = 13,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AsmError {
    UndefinedLabel(String),
    DuplicateLabel(String),
    OutOfRange { at: u32, label: String },
    Unencodable(String),
}

impl fmt::Display for AsmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsmError::UndefinedLabel(l) => write!(f, "undefined label `{l}`"),
            AsmError::DuplicateLabel(l) => write!(f, "duplicate label `{l}`"),
            AsmError::OutOfRange { at, label } => {
                write!(f, "branch/literal at {at:#x} cannot reach `{label}`")
            }
            AsmError::Unencodable(what) => write!(f, "unencodable: {what}"),
        }
    }
}

impl std::error::Error for AsmError {}

#[derive(Debug, Clone)]
enum FixKind {
    B16,
    Bcond16(Cond),
    BW,
    BcondW(Cond),
    Bl,
    Cbz { rn: u8, nonzero: bool },
    LdrLit16(u8),
    LdrLitW(u8),
    Word { thumb: bool },
    Movw(u8),
    Movt(u8),
}

#[derive(Debug, Clone)]
struct Fixup {
    offset: usize,
    kind: FixKind,
    label: String,
}

/// Assembler state: emitted bytes, label table and pending fixups.
#[derive(Debug, Clone)]
pub struct Asm {
    base: u32,
    bytes: Vec<u8>,
    labels: BTreeMap<String, u32>,
    fixups: Vec<Fixup>,
    errors: Vec<AsmError>,
}

fn reglist_mask(regs: &[u8]) -> u16 {
    regs.iter().fold(0u16, |m, &r| m | (1 << r))
}

/// Encode a 32-bit value as a Thumb-2 modified immediate (`i:imm3:imm8`).
pub fn encode_modified_imm(value: u32) -> Option<u16> {
    let b = value & 0xFF;
    if value >> 8 == 0 {
        return Some(value as u16);
    }
    if value == (b << 16) | b {
        return Some(0x100 | b as u16);
    }
    let b1 = (value >> 8) & 0xFF;
    if value == (b1 << 24) | (b1 << 8) {
        return Some(0x200 | b1 as u16);
    }
    if value == b * 0x0101_0101 {
        return Some(0x300 | b as u16);
    }
    // Rotated form: an 8-bit value with its top bit set, rotated right by 8..=31.
    for rot in 8u32..32 {
        let unrot = value.rotate_left(rot);
        if unrot & !0xFF == 0 && unrot & 0x80 != 0 {
            return Some(((rot << 7) | (unrot & 0x7F)) as u16);
        }
    }
    None
}

impl Asm {
    pub fn new(base: u32) -> Self {
        Asm {
            base,
            bytes: Vec::new(),
            labels: BTreeMap::new(),
            fixups: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// Current absolute address.
    pub fn here(&self) -> u32 {
        self.base.wrapping_add(self.bytes.len() as u32)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn label(&mut self, name: &str) -> &mut Self {
        let here = self.here();
        if self.labels.insert(name.to_string(), here).is_some() {
            self.errors.push(AsmError::DuplicateLabel(name.to_string()));
        }
        self
    }

    /// Address of an already-defined label.
    pub fn addr_of(&self, name: &str) -> Option<u32> {
        self.labels.get(name).copied()
    }

    pub fn labels(&self) -> &BTreeMap<String, u32> {
        &self.labels
    }

    fn fix(&mut self, kind: FixKind, label: &str) {
        self.fixups.push(Fixup {
            offset: self.bytes.len(),
            kind,
            label: label.to_string(),
        });
    }

    fn fail(&mut self, what: impl Into<String>) -> &mut Self {
        self.errors.push(AsmError::Unencodable(what.into()));
        self
    }

    // ---- data -----------------------------------------------------------

    pub fn hw(&mut self, h: u16) -> &mut Self {
        self.bytes.extend_from_slice(&h.to_le_bytes());
        self
    }

    pub fn hw2(&mut self, h1: u16, h2: u16) -> &mut Self {
        self.hw(h1).hw(h2)
    }

    pub fn word(&mut self, w: u32) -> &mut Self {
        self.bytes.extend_from_slice(&w.to_le_bytes());
        self
    }

    /// Absolute address of `label` as a data word (with bit0 set when `thumb`).
    pub fn word_label(&mut self, label: &str, thumb: bool) -> &mut Self {
        self.fix(FixKind::Word { thumb }, label);
        self.word(0)
    }

    pub fn bytes(&mut self, data: &[u8]) -> &mut Self {
        self.bytes.extend_from_slice(data);
        self
    }

    /// NUL-terminated ASCII string.
    pub fn asciz(&mut self, s: &str) -> &mut Self {
        self.bytes.extend_from_slice(s.as_bytes());
        self.bytes.push(0);
        self
    }

    pub fn align(&mut self, n: usize, fill: u8) -> &mut Self {
        while !self.bytes.len().is_multiple_of(n) {
            self.bytes.push(fill);
        }
        self
    }

    /// Pad with `fill` up to absolute address `addr`.
    pub fn org(&mut self, addr: u32, fill: u8) -> &mut Self {
        let target = addr.wrapping_sub(self.base) as usize;
        if target < self.bytes.len() {
            return self.fail(format!("org {addr:#x} is behind current position"));
        }
        self.bytes.resize(target, fill);
        self
    }

    /// Pad with NOPs to an `n`-byte boundary, as assemblers do inside code.
    pub fn align_nop(&mut self, n: usize) -> &mut Self {
        if !self.bytes.len().is_multiple_of(2) {
            self.bytes.push(0);
        }
        while !self.bytes.len().is_multiple_of(n) {
            self.hw(0xBF00);
        }
        self
    }

    pub fn space(&mut self, n: usize, fill: u8) -> &mut Self {
        self.bytes.extend(std::iter::repeat_n(fill, n));
        self
    }

    // ---- data processing -----------------------------------------------

    pub fn nop(&mut self) -> &mut Self {
        self.hw(0xBF00)
    }

    pub fn movs(&mut self, rd: u8, imm: u8) -> &mut Self {
        if rd > 7 {
            return self.fail("movs needs a low register");
        }
        self.hw(0x2000 | (rd as u16) << 8 | imm as u16)
    }

    fn plain_imm16(op: u16, rd: u8, imm: u16) -> (u16, u16) {
        let imm4 = imm >> 12;
        let i = (imm >> 11) & 1;
        let imm3 = (imm >> 8) & 7;
        let imm8 = imm & 0xFF;
        (op | i << 10 | imm4, imm3 << 12 | (rd as u16) << 8 | imm8)
    }

    pub fn movw(&mut self, rd: u8, imm: u16) -> &mut Self {
        let (a, b) = Self::plain_imm16(0xF240, rd, imm);
        self.hw2(a, b)
    }

    pub fn movt(&mut self, rd: u8, imm: u16) -> &mut Self {
        let (a, b) = Self::plain_imm16(0xF2C0, rd, imm);
        self.hw2(a, b)
    }

    /// MOVW/MOVT pair loading the absolute address of `label`.
    pub fn mov32_label(&mut self, rd: u8, label: &str) -> &mut Self {
        self.fix(FixKind::Movw(rd), label);
        self.hw2(0, 0);
        self.fix(FixKind::Movt(rd), label);
        self.hw2(0, 0)
    }

    /// MOVW/MOVT pair loading an arbitrary constant.
    pub fn mov32(&mut self, rd: u8, value: u32) -> &mut Self {
        self.movw(rd, value as u16).movt(rd, (value >> 16) as u16)
    }

    fn modified_imm(&mut self, op: u16, rd: u8, rn: u8, value: u32) -> &mut Self {
        match encode_modified_imm(value) {
            Some(imm12) => {
                let i = (imm12 >> 11) & 1;
                let imm3 = (imm12 >> 8) & 7;
                let imm8 = imm12 & 0xFF;
                self.hw2(
                    op | i << 10 | rn as u16,
                    imm3 << 12 | (rd as u16) << 8 | imm8,
                )
            }
            None => self.fail(format!("{value:#x} is not a modified immediate")),
        }
    }

    /// `MOV.W rd, #imm` (modified immediate).
    pub fn mov_w(&mut self, rd: u8, value: u32) -> &mut Self {
        self.modified_imm(0xF040, rd, 0xF, value)
    }

    /// `ORR rd, rn, #imm`.
    pub fn orr_imm(&mut self, rd: u8, rn: u8, value: u32) -> &mut Self {
        if rn == 0xF {
            return self.fail("orr with rn=pc is mov");
        }
        self.modified_imm(0xF040, rd, rn, value)
    }

    /// `BIC rd, rn, #imm`.
    pub fn bic_imm(&mut self, rd: u8, rn: u8, value: u32) -> &mut Self {
        self.modified_imm(0xF020, rd, rn, value)
    }

    /// `ADD rd, rn, #imm` (modified immediate, flags untouched).
    pub fn add_imm_w(&mut self, rd: u8, rn: u8, value: u32) -> &mut Self {
        self.modified_imm(0xF100, rd, rn, value)
    }

    /// 16-bit `ADDS rdn, #imm8`.
    pub fn adds(&mut self, rdn: u8, imm: u8) -> &mut Self {
        self.hw(0x3000 | (rdn as u16) << 8 | imm as u16)
    }

    /// `MOV rd, rm` (high-register form).
    pub fn mov(&mut self, rd: u8, rm: u8) -> &mut Self {
        self.hw(0x4600 | ((rd as u16 >> 3) & 1) << 7 | (rm as u16) << 3 | (rd as u16 & 7))
    }

    pub fn cmp(&mut self, rn: u8, rm: u8) -> &mut Self {
        self.hw(0x4280 | (rm as u16) << 3 | rn as u16)
    }

    pub fn cmp_imm(&mut self, rn: u8, imm: u8) -> &mut Self {
        self.hw(0x2800 | (rn as u16) << 8 | imm as u16)
    }

    pub fn eors(&mut self, rdn: u8, rm: u8) -> &mut Self {
        self.hw(0x4040 | (rm as u16) << 3 | rdn as u16)
    }

    pub fn sub_sp(&mut self, imm: u16) -> &mut Self {
        self.hw(0xB080 | (imm / 4))
    }

    pub fn add_sp(&mut self, imm: u16) -> &mut Self {
        self.hw(0xB000 | (imm / 4))
    }

    /// `ADD rd, sp, #imm`.
    pub fn add_rd_sp(&mut self, rd: u8, imm: u16) -> &mut Self {
        self.hw(0xA800 | (rd as u16) << 8 | (imm / 4))
    }

    /// `IT` block header. `mask` uses the architectural encoding.
    pub fn it(&mut self, cond: Cond, mask: u8) -> &mut Self {
        self.hw(0xBF00 | (cond as u16) << 4 | (mask as u16 & 0xF))
    }

    pub fn udf(&mut self, imm: u8) -> &mut Self {
        self.hw(0xDE00 | imm as u16)
    }

    // ---- system ---------------------------------------------------------

    pub fn msr(&mut self, sysm: u8, rn: u8) -> &mut Self {
        self.hw2(0xF380 | rn as u16, 0x8800 | sysm as u16)
    }

    pub fn mrs(&mut self, rd: u8, sysm: u8) -> &mut Self {
        self.hw2(0xF3EF, 0x8000 | (rd as u16) << 8 | sysm as u16)
    }

    pub fn isb(&mut self) -> &mut Self {
        self.hw2(0xF3BF, 0x8F6F)
    }

    pub fn dsb(&mut self) -> &mut Self {
        self.hw2(0xF3BF, 0x8F4F)
    }

    pub fn dmb(&mut self) -> &mut Self {
        self.hw2(0xF3BF, 0x8F5F)
    }

    pub fn svc(&mut self, imm: u8) -> &mut Self {
        self.hw(0xDF00 | imm as u16)
    }

    pub fn cpsid_i(&mut self) -> &mut Self {
        self.hw(0xB672)
    }

    pub fn cpsie_i(&mut self) -> &mut Self {
        self.hw(0xB662)
    }

    pub fn sg(&mut self) -> &mut Self {
        self.hw2(0xE97F, 0xE97F)
    }

    /// `TT{A}{T} rd, rn`.
    pub fn tt(&mut self, rd: u8, rn: u8, alt: bool, unpriv: bool) -> &mut Self {
        self.hw2(
            0xE840 | rn as u16,
            0xF000 | (rd as u16) << 8 | (alt as u16) << 7 | (unpriv as u16) << 6,
        )
    }

    // ---- loads and stores ------------------------------------------------

    fn ls_imm(&mut self, load: bool, rt: u8, rn: u8, off: i32) -> &mut Self {
        let l = load as u16;
        if off >= 0 && off % 4 == 0 && off < 128 && rt < 8 && rn < 8 {
            return self.hw(0x6000 | l << 11 | ((off / 4) as u16) << 6 | (rn as u16) << 3 | rt as u16);
        }
        if rn == SP && off >= 0 && off % 4 == 0 && off < 1024 && rt < 8 {
            return self.hw(0x9000 | l << 11 | (rt as u16) << 8 | (off / 4) as u16);
        }
        if (0..4096).contains(&off) {
            return self.hw2(0xF8C0 | l << 4 | rn as u16, (rt as u16) << 12 | off as u16);
        }
        if (-255..0).contains(&off) {
            return self.hw2(0xF840 | l << 4 | rn as u16, (rt as u16) << 12 | 0xC00 | (-off) as u16);
        }
        self.fail(format!("load/store offset {off}"))
    }

    pub fn str_imm(&mut self, rt: u8, rn: u8, off: i32) -> &mut Self {
        self.ls_imm(false, rt, rn, off)
    }

    pub fn ldr_imm(&mut self, rt: u8, rn: u8, off: i32) -> &mut Self {
        self.ls_imm(true, rt, rn, off)
    }

    /// Always the 32-bit T3 form.
    pub fn str_w(&mut self, rt: u8, rn: u8, off: u16) -> &mut Self {
        self.hw2(0xF8C0 | rn as u16, (rt as u16) << 12 | (off & 0xFFF))
    }

    /// Always the 32-bit T3 form.
    pub fn ldr_w(&mut self, rt: u8, rn: u8, off: u16) -> &mut Self {
        self.hw2(0xF8D0 | rn as u16, (rt as u16) << 12 | (off & 0xFFF))
    }

    pub fn strb_imm(&mut self, rt: u8, rn: u8, off: u8) -> &mut Self {
        self.hw(0x7000 | ((off & 0x1F) as u16) << 6 | (rn as u16) << 3 | rt as u16)
    }

    pub fn strt(&mut self, rt: u8, rn: u8, off: u8) -> &mut Self {
        self.hw2(0xF840 | rn as u16, (rt as u16) << 12 | 0xE00 | off as u16)
    }

    pub fn ldrt(&mut self, rt: u8, rn: u8, off: u8) -> &mut Self {
        self.hw2(0xF850 | rn as u16, (rt as u16) << 12 | 0xE00 | off as u16)
    }

    /// 16-bit `LDR rt, label` (label must be word aligned and ahead).
    pub fn ldr_lit(&mut self, rt: u8, label: &str) -> &mut Self {
        if rt > 7 {
            return self.ldr_lit_w(rt, label);
        }
        self.fix(FixKind::LdrLit16(rt), label);
        self.hw(0)
    }

    pub fn ldr_lit_w(&mut self, rt: u8, label: &str) -> &mut Self {
        self.fix(FixKind::LdrLitW(rt), label);
        self.hw2(0, 0)
    }

    pub fn push(&mut self, regs: &[u8]) -> &mut Self {
        let mask = reglist_mask(regs);
        if mask & !0x40FF == 0 {
            let m = (mask >> 14) & 1;
            return self.hw(0xB400 | m << 8 | (mask & 0xFF));
        }
        self.hw2(0xE92D, mask)
    }

    pub fn pop(&mut self, regs: &[u8]) -> &mut Self {
        let mask = reglist_mask(regs);
        if mask & !0x80FF == 0 {
            let p = (mask >> 15) & 1;
            return self.hw(0xBC00 | p << 8 | (mask & 0xFF));
        }
        self.hw2(0xE8BD, mask)
    }

    // ---- branches --------------------------------------------------------

    pub fn bx(&mut self, rm: u8) -> &mut Self {
        self.hw(0x4700 | (rm as u16) << 3)
    }

    pub fn blx(&mut self, rm: u8) -> &mut Self {
        self.hw(0x4780 | (rm as u16) << 3)
    }

    pub fn bxns(&mut self, rm: u8) -> &mut Self {
        self.hw(0x4704 | (rm as u16) << 3)
    }

    pub fn blxns(&mut self, rm: u8) -> &mut Self {
        self.hw(0x4784 | (rm as u16) << 3)
    }

    /// 16-bit unconditional branch.
    pub fn b(&mut self, label: &str) -> &mut Self {
        self.fix(FixKind::B16, label);
        self.hw(0)
    }

    /// `b .`
    pub fn b_self(&mut self) -> &mut Self {
        self.hw(0xE7FE)
    }

    pub fn b_w(&mut self, label: &str) -> &mut Self {
        self.fix(FixKind::BW, label);
        self.hw2(0, 0)
    }

    pub fn bcond(&mut self, cond: Cond, label: &str) -> &mut Self {
        self.fix(FixKind::Bcond16(cond), label);
        self.hw(0)
    }

    pub fn bcond_w(&mut self, cond: Cond, label: &str) -> &mut Self {
        self.fix(FixKind::BcondW(cond), label);
        self.hw2(0, 0)
    }

    pub fn bl(&mut self, label: &str) -> &mut Self {
        self.fix(FixKind::Bl, label);
        self.hw2(0, 0)
    }

    pub fn cbz(&mut self, rn: u8, label: &str) -> &mut Self {
        self.fix(FixKind::Cbz { rn, nonzero: false }, label);
        self.hw(0)
    }

    pub fn cbnz(&mut self, rn: u8, label: &str) -> &mut Self {
        self.fix(FixKind::Cbz { rn, nonzero: true }, label);
        self.hw(0)
    }

    // ---- output ------------------------------------------------------------

    fn put16(&mut self, off: usize, h: u16) {
        self.bytes[off..off + 2].copy_from_slice(&h.to_le_bytes());
    }

    fn encode_fixup(fx: &Fixup, at: u32, target: u32) -> Result<Vec<u16>, ()> {
        let pc = at.wrapping_add(4);
        let delta = target.wrapping_sub(pc) as i32 as i64;
        let fits = |bits: u32| {
            let lim = 1i64 << (bits - 1);
            delta % 2 == 0 && delta >= -lim && delta < lim
        };
        Ok(match fx.kind {
            FixKind::B16 => {
                if !fits(12) {
                    return Err(());
                }
                vec![0xE000 | ((delta >> 1) as u16 & 0x7FF)]
            }
            FixKind::Bcond16(c) => {
                if !fits(9) {
                    return Err(());
                }
                vec![0xD000 | (c as u16) << 8 | ((delta >> 1) as u16 & 0xFF)]
            }
            FixKind::Cbz { rn, nonzero } => {
                if !(0..=126).contains(&delta) || delta % 2 != 0 {
                    return Err(());
                }
                let imm = (delta >> 1) as u16;
                let i = (imm >> 5) & 1;
                vec![0xB100 | (nonzero as u16) << 11 | i << 9 | (imm & 0x1F) << 3 | rn as u16]
            }
            FixKind::BW | FixKind::Bl => {
                if !fits(25) {
                    return Err(());
                }
                let v = delta as u32;
                let s = (v >> 24) & 1;
                let i1 = (v >> 23) & 1;
                let i2 = (v >> 22) & 1;
                let imm10 = (v >> 12) & 0x3FF;
                let imm11 = (v >> 1) & 0x7FF;
                let j1 = (!(i1 ^ s)) & 1;
                let j2 = (!(i2 ^ s)) & 1;
                let link = matches!(fx.kind, FixKind::Bl) as u32;
                let h1 = 0xF000 | s << 10 | imm10;
                let h2 = 0x9000 | link << 14 | j1 << 13 | j2 << 11 | imm11;
                vec![h1 as u16, h2 as u16]
            }
            FixKind::BcondW(c) => {
                if !fits(21) {
                    return Err(());
                }
                let v = delta as u32;
                let s = (v >> 20) & 1;
                let j2 = (v >> 19) & 1;
                let j1 = (v >> 18) & 1;
                let imm6 = (v >> 12) & 0x3F;
                let imm11 = (v >> 1) & 0x7FF;
                let h1 = 0xF000 | s << 10 | (c as u32) << 6 | imm6;
                let h2 = 0x8000 | j1 << 13 | j2 << 11 | imm11;
                vec![h1 as u16, h2 as u16]
            }
            FixKind::LdrLit16(rt) => {
                let base = pc & !3;
                let off = target.wrapping_sub(base) as i64;
                if !target.is_multiple_of(4) || !(0..=1020).contains(&off) {
                    return Err(());
                }
                vec![0x4800 | (rt as u16) << 8 | (off / 4) as u16]
            }
            FixKind::LdrLitW(rt) => {
                let base = pc & !3;
                let off = target.wrapping_sub(base) as i32 as i64;
                if off.abs() > 4095 {
                    return Err(());
                }
                let u = (off >= 0) as u16;
                vec![0xF85F | u << 7, (rt as u16) << 12 | off.unsigned_abs() as u16]
            }
            FixKind::Word { thumb } => {
                let w = target | thumb as u32;
                vec![w as u16, (w >> 16) as u16]
            }
            FixKind::Movw(rd) => {
                let (a, b) = Self::plain_imm16(0xF240, rd, target as u16);
                vec![a, b]
            }
            FixKind::Movt(rd) => {
                let (a, b) = Self::plain_imm16(0xF2C0, rd, (target >> 16) as u16);
                vec![a, b]
            }
        })
    }

    /// Resolve all fixups and return the assembled bytes.
    pub fn finish(mut self) -> Result<Vec<u8>, AsmError> {
        if let Some(e) = self.errors.first() {
            return Err(e.clone());
        }
        let fixups = std::mem::take(&mut self.fixups);
        for fx in &fixups {
            let target = *self
                .labels
                .get(&fx.label)
                .ok_or_else(|| AsmError::UndefinedLabel(fx.label.clone()))?;
            let at = self.base.wrapping_add(fx.offset as u32);
            let halfwords = Self::encode_fixup(fx, at, target).map_err(|_| AsmError::OutOfRange {
                at,
                label: fx.label.clone(),
            })?;
            for (i, h) in halfwords.into_iter().enumerate() {
                self.put16(fx.offset + 2 * i, h);
            }
        }
        Ok(self.bytes)
    }
}

/// Exception vector layout used by the synthetic image builders.
#[derive(Debug, Clone)]
pub struct VectorSpec {
    pub initial_sp: u32,
    /// Labels for entries 1..; `None` emits a zero word.
    pub handlers: Vec<Option<String>>,
}

impl VectorSpec {
    /// Reset plus the fifteen architectural system exceptions, with every
    /// populated slot pointing at `default`.
    pub fn standard(initial_sp: u32, reset: &str, default: &str) -> Self {
        let mut handlers = vec![Some(reset.to_string())];
        for n in 2..16 {
            // Slots 7..=10 and 13 are reserved.
            let reserved = (7..=10).contains(&n) || n == 13;
            handlers.push(if reserved { None } else { Some(default.to_string()) });
        }
        VectorSpec { initial_sp, handlers }
    }

    pub fn emit(&self, asm: &mut Asm) {
        asm.word(self.initial_sp);
        for h in &self.handlers {
            match h {
                Some(label) => asm.word_label(label, true),
                None => asm.word(0),
            };
        }
    }
}
