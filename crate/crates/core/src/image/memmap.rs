use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionClass {
    Code,
    #[serde(rename = "SRAM")]
    Sram,
    Peripheral,
    #[serde(rename = "RAM_WB")]
    RamWb,
    #[serde(rename = "RAM_WT")]
    RamWt,
    DeviceShared,
    #[serde(rename = "DevicePE")]
    DevicePe,
    System,
    #[serde(rename = "PPB")]
    Ppb,
    #[serde(rename = "SCS")]
    Scs,
}

impl RegionClass {
    /// On-chip SRAM or external RAM.
    pub fn is_ram(self) -> bool {
        matches!(self, RegionClass::Sram | RegionClass::RamWb | RegionClass::RamWt)
    }

    /// Part of the 0xE0000000 system space (PPB and SCS are nested there).
    pub fn is_system(self) -> bool {
        matches!(self, RegionClass::System | RegionClass::Ppb | RegionClass::Scs)
    }

    pub fn name(self) -> &'static str {
        match self {
            RegionClass::Code => "Code",
            RegionClass::Sram => "SRAM",
            RegionClass::Peripheral => "Peripheral",
            RegionClass::RamWb => "RAM_WB",
            RegionClass::RamWt => "RAM_WT",
            RegionClass::DeviceShared => "DeviceShared",
            RegionClass::DevicePe => "DevicePE",
            RegionClass::System => "System",
            RegionClass::Ppb => "PPB",
            RegionClass::Scs => "SCS",
        }
    }
}

impl fmt::Display for RegionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An inclusive address range with its architectural class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemRegion {
    #[serde(with = "crate::hexnum")]
    pub start: u32,
    #[serde(with = "crate::hexnum")]
    pub end: u32,
    pub class: RegionClass,
    pub default_xn: bool,
}

impl MemRegion {
    pub fn contains(&self, addr: u32) -> bool {
        (self.start..=self.end).contains(&addr)
    }

    pub fn size(&self) -> u64 {
        self.end as u64 - self.start as u64 + 1
    }
}

/// The fixed Cortex-M physical memory map as a flat, sorted tiling of
/// `[0, 2^32)`. The PPB and SCS windows are carved out of the system range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryMap {
    regions: Vec<MemRegion>,
}

impl Default for MemoryMap {
    fn default() -> Self {
        default_memory_map()
    }
}

pub fn default_memory_map() -> MemoryMap {
    use RegionClass::*;
    let rows: [(u32, u32, RegionClass); 11] = [
        (0x0000_0000, 0x1FFF_FFFF, Code),
        (0x2000_0000, 0x3FFF_FFFF, Sram),
        (0x4000_0000, 0x5FFF_FFFF, Peripheral),
        (0x6000_0000, 0x7FFF_FFFF, RamWb),
        (0x8000_0000, 0x9FFF_FFFF, RamWt),
        (0xA000_0000, 0xBFFF_FFFF, DeviceShared),
        (0xC000_0000, 0xDFFF_FFFF, DevicePe),
        (0xE000_0000, 0xE000_DFFF, Ppb),
        (0xE000_E000, 0xE000_EFFF, Scs),
        (0xE000_F000, 0xE00F_FFFF, Ppb),
        (0xE010_0000, 0xFFFF_FFFF, System),
    ];
    MemoryMap {
        regions: rows
            .iter()
            .map(|&(start, end, class)| MemRegion {
                start,
                end,
                class,
                default_xn: !matches!(class, Code | Sram | RamWb | RamWt),
            })
            .collect(),
    }
}

impl MemoryMap {
    pub fn regions(&self) -> &[MemRegion] {
        &self.regions
    }

    pub fn region(&self, addr: u32) -> &MemRegion {
        let i = self.regions.partition_point(|r| r.end < addr);
        &self.regions[i]
    }

    pub fn classify(&self, addr: u32) -> RegionClass {
        self.region(addr).class
    }

    pub fn default_xn(&self, addr: u32) -> bool {
        self.region(addr).default_xn
    }
}

pub fn classify_address(map: &MemoryMap, addr: u32) -> RegionClass {
    map.classify(addr)
}
