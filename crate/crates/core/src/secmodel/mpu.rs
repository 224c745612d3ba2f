//! MPU region semantics for Armv7-M and Armv8-M.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::MemoryMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    V7m,
    V8m,
}

impl Arch {
    pub fn max_regions(self) -> usize {
        match self {
            Arch::V7m => 8,
            Arch::V8m => 16,
        }
    }

    /// The distinct access-permission codes. On v7m, 0b111 is also
    /// accepted as an alias of 0b110.
    pub fn ap_codes(self) -> &'static [u8] {
        match self {
            Arch::V7m => &[0b000, 0b001, 0b010, 0b011, 0b101, 0b110],
            Arch::V8m => &[0b00, 0b01, 0b10, 0b11],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Read,
    Write,
    Execute,
}

impl Access {
    pub const ALL: [Access; 3] = [Access::Read, Access::Write, Access::Execute];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Privilege {
    Unprivileged,
    Privileged,
}

impl Privilege {
    pub const ALL: [Privilege; 2] = [Privilege::Privileged, Privilege::Unprivileged];

    pub fn is_privileged(self) -> bool {
        self == Privilege::Privileged
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Allow,
    Deny,
}

impl Decision {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Decision::Allow
        } else {
            Decision::Deny
        }
    }

    pub fn allowed(self) -> bool {
        self == Decision::Allow
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Allow => "Allow",
            Decision::Deny => "Deny",
        })
    }
}

/// Read/write rights granted by an AP code at each privilege level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ApRights {
    pub priv_read: bool,
    pub priv_write: bool,
    pub unpriv_read: bool,
    pub unpriv_write: bool,
}

impl ApRights {
    const fn new(pr: bool, pw: bool, ur: bool, uw: bool) -> Self {
        ApRights {
            priv_read: pr,
            priv_write: pw,
            unpriv_read: ur,
            unpriv_write: uw,
        }
    }

    pub fn read(&self, p: Privilege) -> bool {
        match p {
            Privilege::Privileged => self.priv_read,
            Privilege::Unprivileged => self.unpriv_read,
        }
    }

    pub fn write(&self, p: Privilege) -> bool {
        match p {
            Privilege::Privileged => self.priv_write,
            Privilege::Unprivileged => self.unpriv_write,
        }
    }
}

const NO: bool = false;
const RW: (bool, bool) = (true, true);
const RO: (bool, bool) = (true, false);
const NA: (bool, bool) = (NO, NO);

const fn rights(p: (bool, bool), u: (bool, bool)) -> ApRights {
    ApRights::new(p.0, p.1, u.0, u.1)
}

/// Armv7-M `MPU_RASR.AP`: privileged / unprivileged. 0b100 is reserved;
/// 0b111 behaves as 0b110.
pub const V7M_AP: [(u8, ApRights); 7] = [
    (0b000, rights(NA, NA)),
    (0b001, rights(RW, NA)),
    (0b010, rights(RW, RO)),
    (0b011, rights(RW, RW)),
    (0b101, rights(RO, NA)),
    (0b110, rights(RO, RO)),
    (0b111, rights(RO, RO)),
];

/// Armv8-M `MPU_RBAR.AP[2:1]`.
pub const V8M_AP: [(u8, ApRights); 4] = [
    (0b00, rights(RW, NA)),
    (0b01, rights(RW, RW)),
    (0b10, rights(RO, NA)),
    (0b11, rights(RO, RO)),
];

pub fn ap_rights(arch: Arch, ap: u8) -> Option<ApRights> {
    let table: &[(u8, ApRights)] = match arch {
        Arch::V7m => &V7M_AP,
        Arch::V8m => &V8M_AP,
    };
    table.iter().find(|(c, _)| *c == ap).map(|(_, r)| *r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionExtent {
    /// Armv7-M: `2^size_log2` bytes with eight subregion-disable bits.
    Sized { size_log2: u8, srd: u8 },
    /// Armv8-M: inclusive last address.
    Limit {
        #[serde(with = "crate::hexnum")]
        limit: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MpuRegion {
    pub number: u8,
    #[serde(with = "crate::hexnum")]
    pub base: u32,
    pub extent: RegionExtent,
    pub ap: u8,
    pub xn: bool,
    #[serde(default)]
    pub pxn: bool,
    pub enabled: bool,
}

impl MpuRegion {
    /// Inclusive last address.
    pub fn last(&self) -> u32 {
        match self.extent {
            RegionExtent::Sized { size_log2, .. } => {
                (self.base as u64 + (1u64 << size_log2.min(32)) - 1).min(u32::MAX as u64) as u32
            }
            RegionExtent::Limit { limit } => limit,
        }
    }

    pub fn covers(&self, addr: u32) -> bool {
        addr >= self.base && addr <= self.last()
    }

    /// Covers `addr` and the containing subregion is not disabled.
    pub fn matches(&self, addr: u32) -> bool {
        if !self.enabled || !self.covers(addr) {
            return false;
        }
        match self.extent {
            RegionExtent::Sized { size_log2, srd } if size_log2 >= 8 && srd != 0 => {
                let sub = ((addr - self.base) as u64) >> (size_log2 - 3);
                srd & (1 << sub) == 0
            }
            _ => true,
        }
    }

    /// Subregion boundaries inside the region, for interval enumeration.
    pub fn boundaries(&self) -> Vec<u64> {
        let mut out = vec![self.base as u64, self.last() as u64 + 1];
        if let RegionExtent::Sized { size_log2, srd } = self.extent {
            if size_log2 >= 8 && srd != 0 {
                let step = 1u64 << (size_log2 - 3);
                out.extend((1..8).map(|k| self.base as u64 + k * step));
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MpuError {
    #[error("invalid MPU configuration: {0}")]
    InvalidConfig(String),
}

fn invalid(msg: impl Into<String>) -> MpuError {
    MpuError::InvalidConfig(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpuConfig {
    pub arch: Arch,
    pub regions: Vec<MpuRegion>,
    pub enable: bool,
    /// `PRIVDEFENA`: privileged accesses with no region match use the
    /// default memory map.
    pub privileged_default: bool,
    pub max_regions: usize,
    pub pxn_supported: bool,
}

impl MpuConfig {
    pub fn disabled(arch: Arch) -> Self {
        MpuConfig {
            arch,
            regions: Vec::new(),
            enable: false,
            privileged_default: false,
            max_regions: arch.max_regions(),
            pxn_supported: arch == Arch::V8m,
        }
    }

    pub fn validate(&self) -> Result<(), MpuError> {
        if self.max_regions != 8 && self.max_regions != 16 {
            return Err(invalid(format!("max_regions {} is not 8 or 16", self.max_regions)));
        }
        if self.regions.len() > self.max_regions {
            return Err(invalid(format!(
                "{} regions exceed the limit of {}",
                self.regions.len(),
                self.max_regions
            )));
        }
        let mut seen = 0u32;
        for r in &self.regions {
            if r.number as usize >= self.max_regions {
                return Err(invalid(format!("region number {} out of range", r.number)));
            }
            if seen & (1 << r.number) != 0 {
                return Err(invalid(format!("region {} defined twice", r.number)));
            }
            seen |= 1 << r.number;
            if ap_rights(self.arch, r.ap).is_none() {
                return Err(invalid(format!("region {}: AP code {:#b} undefined", r.number, r.ap)));
            }
            match (self.arch, r.extent) {
                (Arch::V7m, RegionExtent::Sized { size_log2, srd }) => {
                    if !(5..=32).contains(&size_log2) {
                        return Err(invalid(format!("region {}: size 2^{size_log2}", r.number)));
                    }
                    if size_log2 < 32 && !(r.base as u64).is_multiple_of(1u64 << size_log2) {
                        return Err(invalid(format!(
                            "region {}: base {:#010x} not aligned to its size",
                            r.number, r.base
                        )));
                    }
                    if size_log2 == 32 && r.base != 0 {
                        return Err(invalid(format!("region {}: 4 GiB region must start at 0", r.number)));
                    }
                    if srd != 0 && size_log2 < 8 {
                        return Err(invalid(format!(
                            "region {}: subregions need a size of at least 256 bytes",
                            r.number
                        )));
                    }
                    if r.pxn {
                        return Err(invalid(format!("region {}: PXN is not available on v7m", r.number)));
                    }
                }
                (Arch::V8m, RegionExtent::Limit { limit }) => {
                    if r.base & 0x1F != 0 || limit & 0x1F != 0x1F || limit < r.base {
                        return Err(invalid(format!(
                            "region {}: [{:#010x}, {:#010x}] is not a 32-byte aligned range",
                            r.number, r.base, limit
                        )));
                    }
                    if r.pxn && !self.pxn_supported {
                        return Err(invalid(format!("region {}: PXN not supported", r.number)));
                    }
                }
                _ => {
                    return Err(invalid(format!(
                        "region {}: extent does not match architecture",
                        r.number
                    )))
                }
            }
        }
        if self.arch == Arch::V8m {
            let mut en: Vec<&MpuRegion> = self.regions.iter().filter(|r| r.enabled).collect();
            en.sort_by_key(|r| r.base);
            for w in en.windows(2) {
                if w[1].base <= w[0].last() {
                    return Err(invalid(format!(
                        "regions {} and {} overlap",
                        w[0].number, w[1].number
                    )));
                }
            }
        }
        Ok(())
    }

    /// The region deciding an access to `addr`: the highest-numbered
    /// matching region (v8m regions never overlap).
    pub fn matching_region(&self, addr: u32) -> Option<&MpuRegion> {
        self.regions
            .iter()
            .filter(|r| r.matches(addr))
            .max_by_key(|r| r.number)
    }
}

fn background(map: &MemoryMap, addr: u32, access: Access) -> bool {
    match access {
        Access::Read | Access::Write => true,
        Access::Execute => !map.default_xn(addr),
    }
}

/// Decide one access. Execute additionally requires read permission and no
/// XN (and no PXN for privileged code when supported).
pub fn eval_mpu_access(
    cfg: &MpuConfig,
    map: &MemoryMap,
    addr: u32,
    privilege: Privilege,
    access: Access,
) -> Result<Decision, MpuError> {
    cfg.validate()?;
    Ok(Decision::from_bool(eval_unchecked(cfg, map, addr, privilege, access)))
}

/// [`eval_mpu_access`] without re-validating `cfg`.
pub fn eval_unchecked(
    cfg: &MpuConfig,
    map: &MemoryMap,
    addr: u32,
    privilege: Privilege,
    access: Access,
) -> bool {
    if !cfg.enable {
        return background(map, addr, access);
    }
    let Some(region) = cfg.matching_region(addr) else {
        return privilege.is_privileged()
            && cfg.privileged_default
            && background(map, addr, access);
    };
    let Some(rights) = ap_rights(cfg.arch, region.ap) else {
        return false;
    };
    match access {
        Access::Read => rights.read(privilege),
        Access::Write => rights.write(privilege),
        Access::Execute => {
            rights.read(privilege)
                && !region.xn
                && !(privilege.is_privileged() && cfg.pxn_supported && region.pxn)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::default_memory_map;

    fn one_region(arch: Arch, ap: u8, xn: bool) -> MpuConfig {
        let extent = match arch {
            Arch::V7m => RegionExtent::Sized {
                size_log2: 16,
                srd: 0,
            },
            Arch::V8m => RegionExtent::Limit { limit: 0x2000_FFFF },
        };
        MpuConfig {
            regions: vec![MpuRegion {
                number: 0,
                base: 0x2000_0000,
                extent,
                ap,
                xn,
                pxn: false,
                enabled: true,
            }],
            enable: true,
            ..MpuConfig::disabled(arch)
        }
    }

    #[test]
    fn disabled_mpu_leaves_sram_executable() {
        let map = default_memory_map();
        let cfg = MpuConfig::disabled(Arch::V7m);
        let d = eval_mpu_access(&cfg, &map, 0x2000_0100, Privilege::Unprivileged, Access::Execute);
        assert_eq!(d, Ok(Decision::Allow));
        let d = eval_mpu_access(&cfg, &map, 0x4000_0000, Privilege::Privileged, Access::Execute);
        assert_eq!(d, Ok(Decision::Deny));
    }

    #[test]
    fn xn_blocks_execute_only() {
        let map = default_memory_map();
        let cfg = one_region(Arch::V7m, 0b011, true);
        let eval = |a| eval_mpu_access(&cfg, &map, 0x2000_0100, Privilege::Privileged, a).unwrap();
        assert_eq!(eval(Access::Execute), Decision::Deny);
        assert_eq!(eval(Access::Read), Decision::Allow);
    }

    #[test]
    fn privileged_only_region() {
        let map = default_memory_map();
        let cfg = one_region(Arch::V8m, 0b00, false);
        let w = |p| eval_mpu_access(&cfg, &map, 0x2000_0100, p, Access::Write).unwrap();
        assert_eq!(w(Privilege::Unprivileged), Decision::Deny);
        assert_eq!(w(Privilege::Privileged), Decision::Allow);
    }

    #[test]
    fn subregion_disable_falls_through() {
        let map = default_memory_map();
        let mut cfg = one_region(Arch::V7m, 0b011, false);
        cfg.regions.push(MpuRegion {
            number: 1,
            base: 0x2000_0000,
            extent: RegionExtent::Sized {
                size_log2: 16,
                srd: 0b0000_0001,
            },
            ap: 0b000,
            xn: true,
            pxn: false,
            enabled: true,
        });
        let r = |a| eval_mpu_access(&cfg, &map, a, Privilege::Unprivileged, Access::Read).unwrap();
        // first eighth disabled in region 1 -> region 0 applies
        assert_eq!(r(0x2000_0100), Decision::Allow);
        assert_eq!(r(0x2000_2000), Decision::Deny);
    }

    #[test]
    fn v8_overlap_rejected() {
        let mut cfg = one_region(Arch::V8m, 0b01, false);
        let mut second = cfg.regions[0];
        second.number = 1;
        second.base = 0x2000_8000;
        cfg.regions.push(second);
        assert!(matches!(cfg.validate(), Err(MpuError::InvalidConfig(_))));
    }

    #[test]
    fn background_for_privileged_only_with_privdefena() {
        let map = default_memory_map();
        let mut cfg = one_region(Arch::V7m, 0b011, false);
        let at = |c: &MpuConfig, p| eval_unchecked(c, &map, 0x0800_0000, p, Access::Read);
        assert!(!at(&cfg, Privilege::Privileged));
        cfg.privileged_default = true;
        assert!(at(&cfg, Privilege::Privileged));
        assert!(!at(&cfg, Privilege::Unprivileged));
    }
}
