//! Executable model of Cortex-M protection semantics.

mod attribution;
mod audit;
mod config;
mod mpu;
mod reconstruct;
mod transition;
mod tt;

pub use attribution::{
    resolve_attribution, AttrError, AttrRegion, AttributionConfig, SecurityAttr, MAX_SAU_REGIONS,
};
pub use audit::{audit_mpu_config, elementary_intervals, Issue, IssueKind};
pub use config::{ap_name, parse_attribution_config, parse_mpu_config, parse_transition_script, ConfigError};
pub use mpu::{
    ap_rights, eval_mpu_access, eval_unchecked, Access, ApRights, Arch, Decision, MpuConfig, MpuError,
    MpuRegion, Privilege, RegionExtent, V7M_AP, V8M_AP,
};
pub use reconstruct::{
    canonical_write_log, in_mpu_ns_alias, in_mpu_window, reconstruct_mpu_config, ReconstructError,
    RegWrite, MPU_CTRL, MPU_END, MPU_MAIR0, MPU_MAIR1, MPU_RASR, MPU_RBAR, MPU_RLAR, MPU_RNR,
    MPU_TYPE, NS_ALIAS_OFFSET,
};
pub use transition::{
    explore, run_events, step_security_context, Event, Mode, SecurityContext, SecurityState, StackSel,
    TransitionError,
};
pub use tt::{tt_query, MpuBanks, Rights, TtResult};
