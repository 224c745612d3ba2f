//! Replay of MPU register writes into an [`MpuConfig`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mpu::{Arch, MpuConfig, MpuError, MpuRegion, RegionExtent};

pub const MPU_TYPE: u32 = 0xE000_ED90;
pub const MPU_CTRL: u32 = 0xE000_ED94;
pub const MPU_RNR: u32 = 0xE000_ED98;
pub const MPU_RBAR: u32 = 0xE000_ED9C;
/// `MPU_RASR` on v7m, `MPU_RLAR` on v8m.
pub const MPU_RASR: u32 = 0xE000_EDA0;
pub const MPU_RLAR: u32 = MPU_RASR;
pub const MPU_MAIR0: u32 = 0xE000_EDC0;
pub const MPU_MAIR1: u32 = 0xE000_EDC4;
/// One past the last MPU register.
pub const MPU_END: u32 = 0xE000_EDC8;
/// Offset of the non-secure alias of the SCS.
pub const NS_ALIAS_OFFSET: u32 = 0x0002_0000;

pub fn in_mpu_window(addr: u32) -> bool {
    (MPU_TYPE..MPU_END).contains(&addr)
}

pub fn in_mpu_ns_alias(addr: u32) -> bool {
    in_mpu_window(addr.wrapping_sub(NS_ALIAS_OFFSET))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegWrite {
    #[serde(with = "crate::hexnum")]
    pub addr: u32,
    #[serde(with = "crate::hexnum")]
    pub value: u32,
}

impl RegWrite {
    pub fn new(addr: u32, value: u32) -> Self {
        RegWrite { addr, value }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReconstructError {
    #[error("write to unknown MPU register {0:#010x}")]
    UnknownRegister(u32),
    #[error("region number {0} out of range")]
    RegionOutOfRange(u32),
    #[error(transparent)]
    Invalid(#[from] MpuError),
}

#[derive(Default, Clone, Copy)]
struct RegionRegs {
    rbar: u32,
    rasr: u32,
}

/// Which banked register an address selects: (region offset from RNR, is
/// the attribute/limit half).
fn decode_alias(arch: Arch, addr: u32) -> Option<(u32, bool)> {
    if !(MPU_RBAR..MPU_RBAR + 0x20).contains(&addr) || addr & 3 != 0 {
        return None;
    }
    let slot = (addr - MPU_RBAR) / 8;
    let second = (addr - MPU_RBAR) % 8 == 4;
    match arch {
        Arch::V7m => Some((0, second)),
        Arch::V8m => Some((slot, second)),
    }
}

/// Replay writes in order. Regions that never end up enabled and whose
/// encoding is not a valid region are dropped; they cannot affect access.
pub fn reconstruct_mpu_config(log: &[RegWrite], arch: Arch) -> Result<MpuConfig, ReconstructError> {
    let max = arch.max_regions() as u32;
    let mut ctrl = 0u32;
    let mut rnr = 0u32;
    let mut regs: BTreeMap<u32, RegionRegs> = BTreeMap::new();
    for w in log {
        match w.addr {
            MPU_TYPE => {}
            MPU_MAIR0 | MPU_MAIR1 if arch == Arch::V8m => {}
            MPU_CTRL => ctrl = w.value,
            MPU_RNR => rnr = w.value & 0xFF,
            a => {
                let (slot, second) = decode_alias(arch, a).ok_or(ReconstructError::UnknownRegister(a))?;
                // The primary pair addresses RNR itself; the v8-M aliases
                // A1..A3 address RNR[7:2]:n.
                let mut region = match arch {
                    Arch::V8m if slot != 0 => (rnr & !3) + slot,
                    _ => rnr,
                };
                if arch == Arch::V7m && !second && w.value & 0x10 != 0 {
                    region = w.value & 0xF;
                    rnr = region;
                }
                if region >= max {
                    return Err(ReconstructError::RegionOutOfRange(region));
                }
                let r = regs.entry(region).or_default();
                if second {
                    r.rasr = w.value;
                } else {
                    r.rbar = w.value;
                }
            }
        }
    }
    let mut cfg = MpuConfig {
        enable: ctrl & 1 != 0,
        privileged_default: ctrl & 4 != 0,
        ..MpuConfig::disabled(arch)
    };
    for (&n, r) in &regs {
        let region = match arch {
            Arch::V7m => {
                let size = (r.rasr >> 1) & 0x1F;
                MpuRegion {
                    number: n as u8,
                    base: r.rbar & !0x1F,
                    extent: RegionExtent::Sized {
                        size_log2: (size + 1) as u8,
                        srd: (r.rasr >> 8) as u8,
                    },
                    ap: ((r.rasr >> 24) & 7) as u8,
                    xn: r.rasr & (1 << 28) != 0,
                    pxn: false,
                    enabled: r.rasr & 1 != 0,
                }
            }
            Arch::V8m => MpuRegion {
                number: n as u8,
                base: r.rbar & !0x1F,
                extent: RegionExtent::Limit {
                    limit: r.rasr | 0x1F,
                },
                ap: ((r.rbar >> 1) & 3) as u8,
                xn: r.rbar & 1 != 0,
                pxn: r.rasr & 0x10 != 0,
                enabled: r.rasr & 1 != 0,
            },
        };
        let probe = MpuConfig {
            regions: vec![region],
            ..MpuConfig::disabled(arch)
        };
        if !region.enabled && probe.validate().is_err() {
            continue;
        }
        cfg.regions.push(region);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// A write sequence that programs `cfg` from reset.
pub fn canonical_write_log(cfg: &MpuConfig) -> Vec<RegWrite> {
    let mut regions: Vec<&MpuRegion> = cfg.regions.iter().collect();
    regions.sort_by_key(|r| r.number);
    let mut out = Vec::with_capacity(regions.len() * 3 + 1);
    for r in regions {
        out.push(RegWrite::new(MPU_RNR, r.number as u32));
        match r.extent {
            RegionExtent::Sized { size_log2, srd } => {
                out.push(RegWrite::new(MPU_RBAR, r.base & !0x1F));
                let rasr = (r.enabled as u32)
                    | ((size_log2 as u32).wrapping_sub(1) & 0x1F) << 1
                    | (srd as u32) << 8
                    | (r.ap as u32 & 7) << 24
                    | (r.xn as u32) << 28;
                out.push(RegWrite::new(MPU_RASR, rasr));
            }
            RegionExtent::Limit { limit } => {
                let rbar = (r.base & !0x1F) | (r.ap as u32 & 3) << 1 | r.xn as u32;
                out.push(RegWrite::new(MPU_RBAR, rbar));
                let rlar = (limit & !0x1F) | (r.pxn as u32) << 4 | r.enabled as u32;
                out.push(RegWrite::new(MPU_RLAR, rlar));
            }
        }
    }
    let ctrl = cfg.enable as u32 | (cfg.privileged_default as u32) << 2;
    out.push(RegWrite::new(MPU_CTRL, ctrl));
    out
}
