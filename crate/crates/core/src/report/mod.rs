//! Per-image JSON reports and corpus aggregation.

mod aggregate;
mod json;
mod table;

pub use aggregate::{aggregate, AggregateError, CorpusSummary, FeatureCounts, GroupSummary};
pub use json::{from_json, to_json, JsonError, SCHEMA_VERSION};
pub use table::{format_percent, to_table};

/// Process exit codes shared by the CLI.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FATAL: i32 = 1;
    /// Some corpus entries failed; the rest were reported.
    pub const PARTIAL: i32 = 2;
}
