//! Vendor profiles: vendor-specific addresses, strings and predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const GENERIC: &str = include_str!("../../data/profiles/generic.toml");
const NORDIC: &str = include_str!("../../data/profiles/nordic.toml");

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{origin}: unknown base profile `{base}`")]
    UnknownBase { origin: String, base: String },
    #[error("unknown vendor profile `{0}`")]
    Unknown(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Location and decoding of a readback-protection configuration word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadbackConfig {
    #[serde(with = "crate::hexnum")]
    pub segment: u32,
    #[serde(with = "crate::hexnum")]
    pub offset: u32,
    #[serde(with = "crate::hexnum")]
    pub mask: u32,
    /// Masked value meaning "protection enabled".
    #[serde(with = "crate::hexnum")]
    pub enabled: u32,
}

impl ReadbackConfig {
    pub fn address(&self) -> u32 {
        self.segment.wrapping_add(self.offset)
    }

    /// Erased flash (all ones) never counts as enabled.
    pub fn is_enabled(&self, word: u32) -> bool {
        word != u32::MAX && word & self.mask == self.enabled
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtosSignature {
    pub name: String,
    /// Matched ASCII case-insensitively.
    pub substrings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackGuardMarkers {
    pub rtos: String,
    pub markers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VendorProfile {
    pub id: String,
    #[serde(default)]
    pub description: String,
    #[serde(with = "crate::hexnum::vec")]
    pub smpu_mmio_addresses: Vec<u32>,
    pub readback: Option<ReadbackConfig>,
    pub rtos_signatures: Vec<RtosSignature>,
    pub stack_guard: Vec<StackGuardMarkers>,
}

impl VendorProfile {
    pub fn generic() -> Self {
        ProfileSet::builtin().get("generic").cloned().expect("built-in generic profile")
    }

    pub fn smpu_addresses(&self) -> BTreeSet<u32> {
        self.smpu_mmio_addresses.iter().copied().collect()
    }

    pub fn markers_for(&self, rtos: &str) -> impl Iterator<Item = &str> + '_ {
        let rtos = rtos.to_string();
        self.stack_guard
            .iter()
            .filter(move |g| g.rtos == rtos)
            .flat_map(|g| g.markers.iter().map(String::as_str))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    id: String,
    extends: Option<String>,
    description: Option<String>,
    #[serde(default, with = "crate::hexnum::opt_vec")]
    smpu_mmio_addresses: Option<Vec<u32>>,
    readback: Option<ReadbackConfig>,
    rtos: Option<Vec<RtosSignature>>,
    stack_guard: Option<Vec<StackGuardMarkers>>,
}

/// Profiles by id.
#[derive(Debug, Clone, Default)]
pub struct ProfileSet {
    profiles: BTreeMap<String, VendorProfile>,
}

impl ProfileSet {
    pub fn builtin() -> Self {
        let mut set = ProfileSet::default();
        for (origin, text) in [("generic.toml", GENERIC), ("nordic.toml", NORDIC)] {
            set.add_toml(text, origin).expect("built-in profiles parse");
        }
        set
    }

    pub fn get(&self, id: &str) -> Option<&VendorProfile> {
        self.profiles.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&VendorProfile, ProfileError> {
        self.get(id).ok_or_else(|| ProfileError::Unknown(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.profiles.keys().map(String::as_str)
    }

    /// Parse a profile, resolving `extends` against profiles already in
    /// the set, and add it (replacing any profile with the same id).
    pub fn add_toml(&mut self, text: &str, origin: &str) -> Result<&VendorProfile, ProfileError> {
        let file: ProfileFile = toml::from_str(text).map_err(|e| ProfileError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        let parent = match &file.extends {
            Some(b) => Some(self.profiles.get(b).cloned().ok_or_else(|| ProfileError::UnknownBase {
                origin: origin.to_string(),
                base: b.clone(),
            })?),
            None => None,
        };
        let p = parent.as_ref();
        let profile = VendorProfile {
            id: file.id.clone(),
            description: file
                .description
                .or_else(|| p.map(|p| p.description.clone()))
                .unwrap_or_default(),
            smpu_mmio_addresses: file
                .smpu_mmio_addresses
                .or_else(|| p.map(|p| p.smpu_mmio_addresses.clone()))
                .unwrap_or_default(),
            readback: file.readback.or_else(|| p.and_then(|p| p.readback)),
            rtos_signatures: file
                .rtos
                .or_else(|| p.map(|p| p.rtos_signatures.clone()))
                .unwrap_or_default(),
            stack_guard: file
                .stack_guard
                .or_else(|| p.map(|p| p.stack_guard.clone()))
                .unwrap_or_default(),
        };
        self.profiles.insert(file.id.clone(), profile);
        Ok(&self.profiles[&file.id])
    }

    /// Add every `*.toml` in `dir`, in file-name order.
    pub fn load_dir(&mut self, dir: &Path) -> Result<usize, ProfileError> {
        let io = |e: std::io::Error| ProfileError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        for path in &paths {
            let text = std::fs::read_to_string(path).map_err(io)?;
            self.add_toml(&text, &path.display().to_string())?;
        }
        Ok(paths.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins() {
        let set = ProfileSet::builtin();
        let generic = set.get("generic").unwrap();
        assert_eq!(generic.rtos_signatures.len(), 10);
        assert!(generic.readback.is_none());
        let nordic = set.get("nordic").unwrap();
        assert_eq!(nordic.rtos_signatures, generic.rtos_signatures);
        assert_eq!(nordic.readback.unwrap().address(), 0x1000_1208);
        assert!(!nordic.smpu_mmio_addresses.is_empty());
    }

    #[test]
    fn readback_predicate() {
        let rb = ProfileSet::builtin().get("nordic").unwrap().readback.unwrap();
        assert!(rb.is_enabled(0xFFFF_FF00));
        assert!(!rb.is_enabled(0xFFFF_FFFF));
        assert!(!rb.is_enabled(0xFFFF_FF5A));
    }

    #[test]
    fn override_and_unknown_base() {
        let mut set = ProfileSet::builtin();
        let p = set
            .add_toml("id = \"acme\"\nextends = \"nordic\"\nsmpu_mmio_addresses = [\"0x50000000\"]\n", "acme")
            .unwrap();
        assert_eq!(p.smpu_mmio_addresses, vec![0x5000_0000]);
        assert!(p.readback.is_some());
        assert!(matches!(
            set.add_toml("id = \"x\"\nextends = \"nope\"\n", "x"),
            Err(ProfileError::UnknownBase { .. })
        ));
    }
}
