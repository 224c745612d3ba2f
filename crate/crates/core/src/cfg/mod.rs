//! Function recovery, call graph, strings and block-local constant
//! propagation over an [`InstrIndex`](crate::disasm::InstrIndex).

mod callgraph;
mod constprop;
mod functions;
mod strings;

pub use callgraph::{build_call_graph, CallEdge, CallGraph, EdgeKind};
pub use constprop::{const_value_after, const_value_at, effective_address, reaching_def, WINDOW};
pub use functions::{identify_functions, Function, FunctionSet};
pub use strings::{find_strings, scan_strings, StringEntry, StringTable, MIN_STRING_LEN};
