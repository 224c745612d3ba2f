use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::constprop::const_value_after;
use crate::disasm::{CodeView, InstrIndex, Kind};

/// Shortest run of printable bytes reported as a string.
pub const MIN_STRING_LEN: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringEntry {
    #[serde(with = "crate::hexnum")]
    pub addr: u32,
    pub text: String,
    /// Instructions that materialize the string's address.
    #[serde(with = "crate::hexnum::vec")]
    pub xrefs: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StringTable {
    entries: Vec<StringEntry>,
}

impl StringTable {
    pub fn iter(&self) -> impl Iterator<Item = &StringEntry> + '_ {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Strings containing `needle`, ASCII case-insensitively.
    pub fn matching<'a>(&'a self, needle: &str) -> impl Iterator<Item = &'a StringEntry> + 'a {
        let needle = needle.to_ascii_lowercase();
        self.entries
            .iter()
            .filter(move |e| e.text.to_ascii_lowercase().contains(&needle))
    }
}

fn printable(b: u8) -> bool {
    (0x20..=0x7E).contains(&b)
}

/// Scan for maximal printable-ASCII runs.
pub fn scan_strings(code: &CodeView<'_>) -> Vec<(u32, String)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &b) in code.bytes.iter().chain(std::iter::once(&0)).enumerate() {
        match (printable(b), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= MIN_STRING_LEN {
                    let text = String::from_utf8_lossy(&code.bytes[s..i]).into_owned();
                    out.push((code.base.wrapping_add(s as u32), text));
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Constants materialized by literal loads and wide moves, keyed by value.
fn address_constants(index: &InstrIndex) -> BTreeMap<u32, BTreeSet<u32>> {
    let mut out: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for ins in index.iter() {
        let v = match ins.kind {
            Kind::LdrLiteral { target, .. } => index.literal_value(target),
            Kind::Movt { rd, .. } => const_value_after(index, ins.addr, rd),
            Kind::MovImm { imm, .. } if ins.width == 4 => Some(imm),
            _ => None,
        };
        if let Some(v) = v {
            out.entry(v).or_default().insert(ins.addr);
        }
    }
    out
}

/// Printable strings with cross-references from literal pools and
/// `MOVW`/`MOVT` pairs, matching either the absolute address or the offset
/// from `base`.
pub fn find_strings(code: &CodeView<'_>, index: &InstrIndex) -> StringTable {
    let consts = address_constants(index);
    let entries = scan_strings(code)
        .into_iter()
        .map(|(addr, text)| {
            let off = addr.wrapping_sub(code.base);
            let mut xrefs: BTreeSet<u32> = BTreeSet::new();
            for key in [addr, off] {
                if let Some(sites) = consts.get(&key) {
                    xrefs.extend(sites);
                }
            }
            StringEntry {
                addr,
                text,
                xrefs: xrefs.into_iter().collect(),
            }
        })
        .collect();
    StringTable { entries }
}
