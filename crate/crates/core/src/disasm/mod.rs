//! Thumb/Thumb-2 subset decoder and recursive-descent disassembler.

mod decode;
mod walk;

pub use decode::{
    decode_halfwords, decode_one, instr_width, thumb_expand_imm, CodeView, DecodeError, Instr,
    Kind, TtVariant, LR, PC, SP,
};
pub use walk::{disassemble, DisasmOptions, InstrIndex};

/// Special-register selectors for `MSR`/`MRS`.
pub mod sysm {
    pub const MSP: u8 = 0x08;
    pub const PSP: u8 = 0x09;
    pub const MSPLIM: u8 = 0x0A;
    pub const PSPLIM: u8 = 0x0B;
    pub const PRIMASK: u8 = 0x10;
    pub const BASEPRI: u8 = 0x11;
    pub const BASEPRI_MAX: u8 = 0x12;
    pub const FAULTMASK: u8 = 0x13;
    pub const CONTROL: u8 = 0x14;
    pub const MSP_NS: u8 = 0x88;
    pub const PSP_NS: u8 = 0x89;
    pub const MSPLIM_NS: u8 = 0x8A;
    pub const PSPLIM_NS: u8 = 0x8B;
    pub const CONTROL_NS: u8 = 0x94;

    pub fn is_control(s: u8) -> bool {
        s == CONTROL || s == CONTROL_NS
    }

    pub fn is_psp(s: u8) -> bool {
        s == PSP || s == PSP_NS
    }

    pub fn is_stack_limit(s: u8) -> bool {
        matches!(s, MSPLIM | PSPLIM | MSPLIM_NS | PSPLIM_NS)
    }

    pub fn name(s: u8) -> Option<&'static str> {
        Some(match s {
            MSP => "MSP",
            PSP => "PSP",
            MSPLIM => "MSPLIM",
            PSPLIM => "PSPLIM",
            PRIMASK => "PRIMASK",
            BASEPRI => "BASEPRI",
            BASEPRI_MAX => "BASEPRI_MAX",
            FAULTMASK => "FAULTMASK",
            CONTROL => "CONTROL",
            MSP_NS => "MSP_NS",
            PSP_NS => "PSP_NS",
            MSPLIM_NS => "MSPLIM_NS",
            PSPLIM_NS => "PSPLIM_NS",
            CONTROL_NS => "CONTROL_NS",
            _ => return None,
        })
    }
}
