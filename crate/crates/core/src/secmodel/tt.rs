//! Test-target (TT) style queries.

use serde::{Deserialize, Serialize};

use super::attribution::{resolve_attribution, AttributionConfig, SecurityAttr};
use super::mpu::{eval_unchecked, Access, MpuConfig, Privilege};
use super::transition::{SecurityContext, SecurityState};
use crate::image::MemoryMap;

/// Secure and non-secure MPU banks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpuBanks {
    pub secure: MpuConfig,
    pub non_secure: MpuConfig,
}

impl MpuBanks {
    pub fn for_state(&self, state: SecurityState) -> &MpuConfig {
        match state {
            SecurityState::Secure => &self.secure,
            SecurityState::NonSecure => &self.non_secure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rights {
    pub read_ok: bool,
    pub write_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TtResult {
    /// `None` when masked from a non-secure caller.
    pub attribution: Option<SecurityAttr>,
    pub privileged: Rights,
    pub unprivileged: Rights,
    pub masked: bool,
}

/// Query `addr` as seen from `ctx`. With `alternate` (the TTA forms), a
/// secure caller queries the non-secure MPU bank; otherwise the bank of the
/// caller's own state is used. A non-secure caller asking about a secure or
/// NSC address learns nothing: all fields read as not accessible.
pub fn tt_query(
    ctx: &SecurityContext,
    addr: u32,
    banks: &MpuBanks,
    attr_cfg: &AttributionConfig,
    map: &MemoryMap,
    alternate: bool,
) -> TtResult {
    let attr = resolve_attribution(attr_cfg, addr);
    let none = Rights { read_ok: false, write_ok: false };
    if ctx.state == SecurityState::NonSecure && attr != SecurityAttr::NonSecure {
        return TtResult {
            attribution: None,
            privileged: none,
            unprivileged: none,
            masked: true,
        };
    }
    let bank = if alternate && ctx.state == SecurityState::Secure {
        &banks.non_secure
    } else {
        banks.for_state(ctx.state)
    };
    let rights = |p| Rights {
        read_ok: eval_unchecked(bank, map, addr, p, Access::Read),
        write_ok: eval_unchecked(bank, map, addr, p, Access::Write),
    };
    TtResult {
        attribution: Some(attr),
        privileged: rights(Privilege::Privileged),
        unprivileged: rights(Privilege::Unprivileged),
        masked: false,
    }
}
