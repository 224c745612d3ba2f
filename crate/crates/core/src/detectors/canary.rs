//! Stack-canary detection: the libc failure string reached from the call
//! tree, or a guard-load/compare byte pattern from a known toolchain.

use std::fmt::Write as _;

use regex::bytes::Regex;
use serde::Deserialize;
use thiserror::Error;

use super::{AnalysisContext, Detail, Detector, Evidence, Feature, Finding, Prior, Verdict};

pub const CANARY_STRING: &str = "*** stack smashing detected ***";

/// Fixed terminator canary some C libraries install by default.
pub const TERMINATOR_CANARY: u32 = 0xff0a_0000;

const BUILTIN: [(&str, &str); 3] = [
    ("clang.toml", include_str!("../../data/canary/clang.toml")),
    ("gcc.toml", include_str!("../../data/canary/gcc.toml")),
    ("armcc.toml", include_str!("../../data/canary/armcc.toml")),
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("bad token `{0}`")]
    BadToken(String),
    #[error("empty template")]
    Empty,
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
}

/// A compiled byte template.
#[derive(Debug, Clone)]
pub struct Template {
    source: String,
    regex: Regex,
}

fn byte_class(pred: impl Fn(u8) -> bool) -> String {
    let mut s = String::from("[");
    for b in 0..=255u8 {
        if pred(b) {
            write!(s, "\\x{b:02x}").unwrap();
        }
    }
    s.push(']');
    s
}

fn nibble(c: char) -> Option<Option<u8>> {
    match c {
        '?' => Some(None),
        _ => c.to_digit(16).map(|d| Some(d as u8)),
    }
}

fn compile_token(tok: &str) -> Result<String, TemplateError> {
    let bad = || TemplateError::BadToken(tok.to_string());
    if let Some(n) = tok.strip_prefix('*') {
        let n: usize = n.parse().map_err(|_| bad())?;
        if !n.is_multiple_of(2) {
            return Err(bad());
        }
        return Ok(format!("(?:..){{0,{}}}", n / 2));
    }
    if let Some(bits) = tok.strip_prefix("b:") {
        if bits.len() != 8 || !bits.chars().all(|c| matches!(c, '0' | '1' | 'x')) {
            return Err(bad());
        }
        let (mut mask, mut want) = (0u8, 0u8);
        for (i, c) in bits.chars().enumerate() {
            let bit = 0x80 >> i;
            if c != 'x' {
                mask |= bit;
                if c == '1' {
                    want |= bit;
                }
            }
        }
        return Ok(byte_class(|b| b & mask == want));
    }
    let mut cs = tok.chars();
    match (cs.next().and_then(nibble), cs.next().and_then(nibble), cs.next()) {
        (Some(None), Some(None), None) => Ok(".".to_string()),
        (Some(Some(h)), Some(Some(l)), None) => Ok(format!("\\x{:02x}", h << 4 | l)),
        (Some(h), Some(l), None) => Ok(byte_class(|b| {
            h.is_none_or(|h| b >> 4 == h) && l.is_none_or(|l| b & 0xF == l)
        })),
        _ => Err(bad()),
    }
}

impl Template {
    pub fn compile(source: &str) -> Result<Self, TemplateError> {
        let parts = source
            .split_whitespace()
            .map(|t| compile_token(&t.to_ascii_lowercase()))
            .collect::<Result<Vec<_>, _>>()?;
        if parts.is_empty() {
            return Err(TemplateError::Empty);
        }
        let regex = Regex::new(&format!("(?s-u){}", parts.concat())).expect("template regex is well-formed");
        Ok(Template {
            source: source.to_string(),
            regex,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// First halfword-aligned match at or after `from`, as `(start, end)`.
    pub fn find_aligned(&self, hay: &[u8], from: usize) -> Option<(usize, usize)> {
        let mut pos = from + (from & 1);
        while pos <= hay.len() {
            let m = self.regex.find_at(hay, pos)?;
            if m.start() % 2 == 0 {
                return Some((m.start(), m.end()));
            }
            pos = m.start() + 1;
        }
        None
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    family: String,
    toolchain: String,
    #[serde(default)]
    description: String,
    prologue: Vec<String>,
    epilogue: Vec<String>,
}

/// Prologue and epilogue templates for one toolchain's canary codegen.
#[derive(Debug, Clone)]
pub struct CanaryFamily {
    pub name: String,
    pub toolchain: String,
    pub description: String,
    pub prologue: Vec<Template>,
    pub epilogue: Vec<Template>,
}

impl CanaryFamily {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, TemplateError> {
        let f: FamilyFile = toml::from_str(text).map_err(|e| TemplateError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        let compile = |v: &[String]| v.iter().map(|s| Template::compile(s)).collect::<Result<Vec<_>, _>>();
        Ok(CanaryFamily {
            name: f.family,
            toolchain: f.toolchain,
            description: f.description,
            prologue: compile(&f.prologue)?,
            epilogue: compile(&f.epilogue)?,
        })
    }

    /// Offsets of a prologue match and a later epilogue match in `body`.
    pub fn match_body(&self, body: &[u8]) -> Option<(usize, usize)> {
        self.prologue.iter().find_map(|pro| {
            let (ps, pe) = pro.find_aligned(body, 0)?;
            self.epilogue
                .iter()
                .filter_map(|epi| epi.find_aligned(body, pe))
                .map(|(es, _)| (ps, es))
                .min_by_key(|m| m.1)
        })
    }
}

pub fn builtin_families() -> Vec<CanaryFamily> {
    BUILTIN
        .iter()
        .map(|(origin, text)| CanaryFamily::from_toml(text, origin).expect("built-in canary family"))
        .collect()
}

pub struct CanaryDetector {
    families: Vec<CanaryFamily>,
}

impl CanaryDetector {
    pub fn builtin() -> Self {
        CanaryDetector::with_families(builtin_families())
    }

    pub fn with_families(families: Vec<CanaryFamily>) -> Self {
        CanaryDetector { families }
    }
}

impl Detector for CanaryDetector {
    fn name(&self) -> &'static str {
        "stack_canaries"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::StackCanaries]
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, _: &Prior) -> Vec<Finding> {
        let p = ctx.pipeline().expect("pipeline");
        let mut evidence = Vec::new();
        let mut via_string = false;
        for s in p.strings.iter().filter(|s| s.text.contains(CANARY_STRING)) {
            for &x in &s.xrefs {
                if let Some(f) = p.functions.containing(x) {
                    if p.callgraph.in_call_tree(f.entry) {
                        via_string = true;
                        evidence.push(Evidence::new(
                            x,
                            format!("failure message at {:#010x} used by called function {:#010x}", s.addr, f.entry),
                        ));
                    }
                }
            }
        }
        let mut families: Vec<String> = Vec::new();
        for f in p.functions.iter() {
            let body = p.code.slice(f.entry, f.end());
            for fam in &self.families {
                if let Some((pro, epi)) = fam.match_body(body) {
                    let at = f.entry + pro as u32;
                    evidence.push(Evidence::new(
                        at,
                        format!("{} guard prologue; check at {:#010x}", fam.name, f.entry + epi as u32),
                    ));
                    if !families.contains(&fam.name) {
                        families.push(fam.name.clone());
                    }
                }
            }
        }
        let fixed_guard = p.index.literal_words().find(|&w| p.index.literal_value(w) == Some(TERMINATOR_CANARY)).map(|_| TERMINATOR_CANARY);
        let verdict = if evidence.is_empty() { Verdict::Absent } else { Verdict::Present };
        vec![Finding::new(
            Feature::StackCanaries,
            verdict,
            evidence,
            Detail::Canary {
                via_string,
                families,
                fixed_guard,
            },
        )]
    }
}
