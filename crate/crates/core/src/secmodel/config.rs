//! Text configuration files for the security model.
//!
//! MPU:
//! ```toml
//! arch = "v7m"            # or "v8m"
//! enable = true
//! privileged_default = false
//!
//! [[region]]
//! number = 0
//! base = "0x20000000"
//! size = "0x10000"        # v7m; or `limit = "0x2000ffff"` on v8m
//! subregion_disable = "0x00"
//! ap = "rw/ro"            # v7m: no/no rw/no rw/ro rw/rw ro/no ro/ro
//!                         # v8m: rw-priv rw-any ro-priv ro-any
//! xn = true
//! ```
//!
//! Attribution: `sau_enabled`, `all_ns`, and `[[idau]]` / `[[sau]]` tables
//! with `start`, `end` (inclusive) and `attr` (`secure`, `nsc`,
//! `non-secure`).
//!
//! Transitions: a `[start]` context plus an `events` array of tables
//! tagged by `event`.

use serde::Deserialize;
use thiserror::Error;

use super::attribution::{AttrError, AttrRegion, AttributionConfig, SecurityAttr};
use super::mpu::{Arch, MpuConfig, MpuError, MpuRegion, RegionExtent};
use super::transition::{Event, Mode, SecurityContext, SecurityState, StackSel};
use super::mpu::Privilege;
use crate::hexnum;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Mpu(#[from] MpuError),
    #[error(transparent)]
    Attr(#[from] AttrError),
}

impl From<toml::de::Error> for ConfigError {
    fn from(e: toml::de::Error) -> Self {
        ConfigError::Parse(e.to_string())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    Int(u64),
    Str(String),
}

impl Num {
    fn value(&self) -> Result<u64, ConfigError> {
        match self {
            Num::Int(v) => Ok(*v),
            Num::Str(s) => {
                let t = s.trim().replace('_', "");
                let (digits, radix) = if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
                    (h, 16)
                } else if let Some(b) = t.strip_prefix("0b") {
                    (b, 2)
                } else {
                    (t.as_str(), 10)
                };
                u64::from_str_radix(digits, radix).map_err(|e| ConfigError::Parse(format!("`{s}`: {e}")))
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ApSpec {
    Code(u8),
    Name(String),
}

const V7M_AP_NAMES: [(&str, u8); 7] = [
    ("no/no", 0b000),
    ("rw/no", 0b001),
    ("rw/ro", 0b010),
    ("rw/rw", 0b011),
    ("ro/no", 0b101),
    ("ro/ro", 0b110),
    ("ro/ro-alt", 0b111),
];

const V8M_AP_NAMES: [(&str, u8); 4] = [
    ("rw-priv", 0b00),
    ("rw-any", 0b01),
    ("ro-priv", 0b10),
    ("ro-any", 0b11),
];

/// Symbolic name of an AP code.
pub fn ap_name(arch: Arch, ap: u8) -> Option<&'static str> {
    let names: &[(&str, u8)] = match arch {
        Arch::V7m => &V7M_AP_NAMES,
        Arch::V8m => &V8M_AP_NAMES,
    };
    names.iter().find(|(_, c)| *c == ap).map(|(n, _)| *n)
}

fn parse_ap(arch: Arch, spec: &ApSpec) -> Result<u8, ConfigError> {
    match spec {
        ApSpec::Code(c) => Ok(*c),
        ApSpec::Name(s) => {
            let names: &[(&str, u8)] = match arch {
                Arch::V7m => &V7M_AP_NAMES,
                Arch::V8m => &V8M_AP_NAMES,
            };
            let lower = s.trim().to_ascii_lowercase();
            if let Some((_, c)) = names.iter().find(|(n, _)| *n == lower) {
                return Ok(*c);
            }
            Num::Str(lower)
                .value()
                .ok()
                .and_then(|v| u8::try_from(v).ok())
                .ok_or_else(|| ConfigError::Parse(format!("unknown AP code `{s}` for {arch:?}")))
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionFile {
    number: u8,
    base: Num,
    size: Option<Num>,
    limit: Option<Num>,
    subregion_disable: Option<Num>,
    ap: ApSpec,
    #[serde(default)]
    xn: bool,
    #[serde(default)]
    pxn: bool,
    #[serde(default = "yes")]
    enabled: bool,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MpuFile {
    arch: Arch,
    #[serde(default)]
    enable: bool,
    #[serde(default)]
    privileged_default: bool,
    max_regions: Option<usize>,
    pxn_supported: Option<bool>,
    #[serde(default, rename = "region")]
    regions: Vec<RegionFile>,
}

fn to_u32(n: &Num, what: &str) -> Result<u32, ConfigError> {
    let v = n.value()?;
    u32::try_from(v).map_err(|_| ConfigError::Parse(format!("{what} {v:#x} exceeds 32 bits")))
}

fn region_from(arch: Arch, r: &RegionFile) -> Result<MpuRegion, ConfigError> {
    let bad = |m: &str| ConfigError::Parse(format!("region {}: {m}", r.number));
    let extent = match arch {
        Arch::V7m => {
            if r.limit.is_some() {
                return Err(bad("`limit` is v8m only; use `size`"));
            }
            let size = r.size.as_ref().ok_or_else(|| bad("missing `size`"))?.value()?;
            if !size.is_power_of_two() || size > 1 << 32 {
                return Err(bad(&format!("size {size:#x} is not a power of two")));
            }
            let srd = match &r.subregion_disable {
                Some(n) => u8::try_from(n.value()?).map_err(|_| bad("subregion mask exceeds 8 bits"))?,
                None => 0,
            };
            RegionExtent::Sized {
                size_log2: size.trailing_zeros() as u8,
                srd,
            }
        }
        Arch::V8m => {
            if r.size.is_some() || r.subregion_disable.is_some() {
                return Err(bad("v8m regions take `limit`, not `size`/`subregion_disable`"));
            }
            let limit = r.limit.as_ref().ok_or_else(|| bad("missing `limit`"))?;
            RegionExtent::Limit {
                limit: to_u32(limit, "limit")?,
            }
        }
    };
    Ok(MpuRegion {
        number: r.number,
        base: to_u32(&r.base, "base")?,
        extent,
        ap: parse_ap(arch, &r.ap)?,
        xn: r.xn,
        pxn: r.pxn,
        enabled: r.enabled,
    })
}

/// Parse and validate an MPU configuration.
pub fn parse_mpu_config(text: &str) -> Result<MpuConfig, ConfigError> {
    let file: MpuFile = toml::from_str(text)?;
    let arch = file.arch;
    let cfg = MpuConfig {
        arch,
        regions: file
            .regions
            .iter()
            .map(|r| region_from(arch, r))
            .collect::<Result<_, _>>()?,
        enable: file.enable,
        privileged_default: file.privileged_default,
        max_regions: file.max_regions.unwrap_or(arch.max_regions()),
        pxn_supported: file.pxn_supported.unwrap_or(arch == Arch::V8m),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttrRegionFile {
    #[serde(with = "hexnum")]
    start: u32,
    #[serde(with = "hexnum")]
    end: u32,
    attr: SecurityAttr,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttrFile {
    #[serde(default)]
    sau_enabled: bool,
    #[serde(default)]
    all_ns: bool,
    #[serde(default)]
    idau: Vec<AttrRegionFile>,
    #[serde(default)]
    sau: Vec<AttrRegionFile>,
}

pub fn parse_attribution_config(text: &str) -> Result<AttributionConfig, ConfigError> {
    let file: AttrFile = toml::from_str(text)?;
    let conv = |v: Vec<AttrRegionFile>| {
        v.into_iter()
            .map(|r| AttrRegion { start: r.start, end: r.end, attr: r.attr })
            .collect()
    };
    let cfg = AttributionConfig {
        idau_regions: conv(file.idau),
        sau_regions: conv(file.sau),
        sau_enabled: file.sau_enabled,
        all_ns: file.all_ns,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StartFile {
    #[serde(default = "thread")]
    mode: Mode,
    #[serde(rename = "priv")]
    privilege: Privilege,
    state: SecurityState,
    #[serde(default = "msp")]
    spsel: StackSel,
}

fn thread() -> Mode {
    Mode::Thread
}

fn msp() -> StackSel {
    StackSel::Msp
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionFile {
    start: StartFile,
    #[serde(default)]
    events: Vec<Event>,
}

/// A start context and an event script.
pub fn parse_transition_script(text: &str) -> Result<(SecurityContext, Vec<Event>), ConfigError> {
    let file: TransitionFile = toml::from_str(text)?;
    let s = file.start;
    let ctx = SecurityContext {
        mode: s.mode,
        privilege: s.privilege,
        state: s.state,
        spsel: s.spsel,
        control_npriv: !s.privilege.is_privileged(),
    };
    if !ctx.invariant_holds() {
        return Err(ConfigError::Parse(format!("start context {ctx} violates mode invariants")));
    }
    Ok((ctx, file.events))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_v7_region() {
        let cfg = parse_mpu_config(
            r#"
            arch = "v7m"
            enable = true
            [[region]]
            number = 1
            base = "0x20000000"
            size = "0x10000"
            ap = "RW/RO"
            xn = true
            "#,
        )
        .unwrap();
        assert_eq!(cfg.regions[0].ap, 0b010);
        assert_eq!(cfg.regions[0].last(), 0x2000_FFFF);
    }

    #[test]
    fn overlapping_v8_is_invalid() {
        let err = parse_mpu_config(
            r#"
            arch = "v8m"
            enable = true
            [[region]]
            number = 0
            base = "0x20000000"
            limit = "0x2000ffff"
            ap = "rw-any"
            [[region]]
            number = 1
            base = "0x20008000"
            limit = "0x2001ffff"
            ap = "ro-any"
            "#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Mpu(MpuError::InvalidConfig(_))));
    }

    #[test]
    fn attribution_file() {
        let cfg = parse_attribution_config(
            r#"
            sau_enabled = true
            [[idau]]
            start = "0x10000000"
            end = "0x1fffffff"
            attr = "secure"
            [[sau]]
            start = 0
            end = "0x0fffffff"
            attr = "non-secure"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.sau_regions[0].attr, SecurityAttr::NonSecure);
    }

    #[test]
    fn transition_script() {
        let (ctx, events) = parse_transition_script(
            r#"
            start = { priv = "unprivileged", state = "non-secure" }
            events = [
              { event = "svc" },
              { event = "exception_return", to = "thread", spsel = "psp" },
              { event = "write_control_npriv", value = false },
            ]
            "#,
        )
        .unwrap();
        assert!(ctx.control_npriv);
        assert_eq!(events.len(), 3);
    }
}
