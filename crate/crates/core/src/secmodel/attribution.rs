//! SAU/IDAU security attribution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_SAU_REGIONS: usize = 8;

/// Ordered by security level: `NonSecure < Nsc < Secure`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecurityAttr {
    NonSecure,
    Nsc,
    Secure,
}

impl SecurityAttr {
    pub const ALL: [SecurityAttr; 3] = [SecurityAttr::NonSecure, SecurityAttr::Nsc, SecurityAttr::Secure];

    pub fn name(self) -> &'static str {
        match self {
            SecurityAttr::NonSecure => "NonSecure",
            SecurityAttr::Nsc => "NSC",
            SecurityAttr::Secure => "Secure",
        }
    }
}

impl std::fmt::Display for SecurityAttr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttrRegion {
    #[serde(with = "crate::hexnum")]
    pub start: u32,
    /// Inclusive.
    #[serde(with = "crate::hexnum")]
    pub end: u32,
    pub attr: SecurityAttr,
}

impl AttrRegion {
    pub fn contains(&self, addr: u32) -> bool {
        (self.start..=self.end).contains(&addr)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionConfig {
    #[serde(default)]
    pub idau_regions: Vec<AttrRegion>,
    #[serde(default)]
    pub sau_regions: Vec<AttrRegion>,
    #[serde(default)]
    pub sau_enabled: bool,
    /// `SAU_CTRL.ALLNS`: with the SAU disabled, mark everything non-secure
    /// instead of secure.
    #[serde(default)]
    pub all_ns: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttrError {
    #[error("{0} SAU regions exceed the limit of {MAX_SAU_REGIONS}")]
    TooManySauRegions(usize),
    #[error("{unit} region [{start:#010x}, {end:#010x}] is empty")]
    EmptyRegion { unit: &'static str, start: u32, end: u32 },
    #[error("{unit} regions overlap at {at:#010x}")]
    Overlap { unit: &'static str, at: u32 },
}

fn check_unit(unit: &'static str, regions: &[AttrRegion]) -> Result<(), AttrError> {
    let mut sorted: Vec<&AttrRegion> = regions.iter().collect();
    sorted.sort_by_key(|r| r.start);
    for r in &sorted {
        if r.end < r.start {
            return Err(AttrError::EmptyRegion { unit, start: r.start, end: r.end });
        }
    }
    for w in sorted.windows(2) {
        if w[1].start <= w[0].end {
            return Err(AttrError::Overlap { unit, at: w[1].start });
        }
    }
    Ok(())
}

impl AttributionConfig {
    pub fn validate(&self) -> Result<(), AttrError> {
        if self.sau_regions.len() > MAX_SAU_REGIONS {
            return Err(AttrError::TooManySauRegions(self.sau_regions.len()));
        }
        check_unit("IDAU", &self.idau_regions)?;
        check_unit("SAU", &self.sau_regions)
    }

    pub fn idau_attr(&self, addr: u32) -> SecurityAttr {
        self.idau_regions
            .iter()
            .find(|r| r.contains(addr))
            .map_or(SecurityAttr::NonSecure, |r| r.attr)
    }

    pub fn sau_attr(&self, addr: u32) -> SecurityAttr {
        if !self.sau_enabled {
            return if self.all_ns {
                SecurityAttr::NonSecure
            } else {
                SecurityAttr::Secure
            };
        }
        self.sau_regions
            .iter()
            .find(|r| r.contains(addr))
            .map_or(SecurityAttr::Secure, |r| r.attr)
    }
}

/// The stricter of the IDAU and SAU attributions.
pub fn resolve_attribution(cfg: &AttributionConfig, addr: u32) -> SecurityAttr {
    cfg.idau_attr(addr).max(cfg.sau_attr(addr))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(idau: SecurityAttr, sau: SecurityAttr) -> AttributionConfig {
        let whole = |attr| AttrRegion { start: 0x1000_0000, end: 0x1FFF_FFFF, attr };
        AttributionConfig {
            idau_regions: vec![whole(idau)],
            sau_regions: vec![whole(sau)],
            sau_enabled: true,
            all_ns: false,
        }
    }

    #[test]
    fn highest_level_wins() {
        use SecurityAttr::*;
        assert_eq!(resolve_attribution(&cfg(Secure, NonSecure), 0x1000_0000), Secure);
        assert_eq!(resolve_attribution(&cfg(NonSecure, NonSecure), 0x1000_0000), NonSecure);
        assert_eq!(resolve_attribution(&cfg(Nsc, NonSecure), 0x1000_0000), Nsc);
    }

    #[test]
    fn unmatched_defaults() {
        let mut c = cfg(SecurityAttr::NonSecure, SecurityAttr::NonSecure);
        assert_eq!(resolve_attribution(&c, 0x2000_0000), SecurityAttr::Secure);
        c.sau_enabled = false;
        assert_eq!(resolve_attribution(&c, 0x1000_0000), SecurityAttr::Secure);
        c.all_ns = true;
        assert_eq!(resolve_attribution(&c, 0x1000_0000), SecurityAttr::NonSecure);
    }

    #[test]
    fn validation() {
        let r = |s, e| AttrRegion { start: s, end: e, attr: SecurityAttr::NonSecure };
        let mut c = AttributionConfig { sau_regions: vec![r(0, 0xFF), r(0x80, 0x1FF)], ..Default::default() };
        assert_eq!(c.validate(), Err(AttrError::Overlap { unit: "SAU", at: 0x80 }));
        c.sau_regions = (0..9).map(|i| r(i * 0x100, i * 0x100 + 0xFF)).collect();
        assert_eq!(c.validate(), Err(AttrError::TooManySauRegions(9)));
    }
}
