use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    FirmwareImage, FormatRegistry, IngestError, LoadOptions, META_DEVICE, META_IMAGE_ID, META_PROFILE,
};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("duplicate manifest entry `{0}`")]
    DuplicatePath(String),
}

/// One firmware file in a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<String>,
    #[serde(default, with = "crate::hexnum::opt", skip_serializing_if = "Option::is_none")]
    pub base: Option<u32>,
    /// Base-candidate alignment override.
    #[serde(default, with = "crate::hexnum::opt", skip_serializing_if = "Option::is_none")]
    pub alignment: Option<u32>,
}

impl ManifestEntry {
    pub fn new(path: impl Into<String>) -> Self {
        ManifestEntry {
            path: path.into(),
            format: None,
            profile: None,
            device: None,
            base: None,
            alignment: None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ManifestFile {
    #[serde(default, rename = "entry")]
    entries: Vec<ManifestEntry>,
}

/// A list of firmware files. Relative paths resolve against `root`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self, ManifestError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.path.as_str()) {
                return Err(ManifestError::DuplicatePath(e.path.clone()));
            }
        }
        Ok(CorpusManifest {
            root: root.into(),
            entries,
        })
    }

    /// Parse TOML with one `[[entry]]` table per file.
    pub fn from_toml_str(text: &str, root: impl Into<PathBuf>) -> Result<Self, ManifestError> {
        let file: ManifestFile = toml::from_str(text)?;
        CorpusManifest::new(root, file.entries)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        CorpusManifest::from_toml_str(&text, root)
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Per-entry outcome of a corpus walk.
#[derive(Debug)]
pub struct CorpusItem {
    pub entry: ManifestEntry,
    pub result: Result<FirmwareImage, IngestError>,
}

/// Read and decode a single file.
pub fn load_path(
    path: &Path,
    hint: Option<&str>,
    registry: &FormatRegistry,
    opts: &LoadOptions,
) -> Result<FirmwareImage, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut img = registry.decode(&bytes, hint, opts)?;
    img.metadata
        .insert(META_IMAGE_ID.to_string(), path.display().to_string());
    Ok(img)
}

/// Load one entry and attach its manifest metadata.
pub fn load_entry(
    manifest: &CorpusManifest,
    entry: &ManifestEntry,
    registry: &FormatRegistry,
    opts: &LoadOptions,
) -> Result<FirmwareImage, IngestError> {
    let mut img = load_path(&manifest.resolve(entry), entry.format.as_deref(), registry, opts)?;
    if let Some(p) = &entry.profile {
        img.metadata.insert(META_PROFILE.to_string(), p.clone());
    }
    if let Some(d) = &entry.device {
        img.metadata.insert(META_DEVICE.to_string(), d.clone());
    }
    if let Some(b) = entry.base {
        img.base = Some(b);
    }
    Ok(img)
}

/// Lazily decode every entry with default options. Decode failures are
/// reported per item rather than ending the walk.
pub fn walk_corpus(manifest: &CorpusManifest) -> impl Iterator<Item = CorpusItem> + '_ {
    let registry = FormatRegistry::default();
    let opts = LoadOptions::default();
    manifest.entries.iter().map(move |entry| CorpusItem {
        entry: entry.clone(),
        result: load_entry(manifest, entry, &registry, &opts),
    })
}

/// Like [`walk_corpus`] with a caller-supplied registry and per-entry options.
pub fn walk_corpus_with<'a, F>(
    manifest: &'a CorpusManifest,
    registry: &'a FormatRegistry,
    mut opts_for: F,
) -> impl Iterator<Item = CorpusItem> + 'a
where
    F: FnMut(&ManifestEntry) -> LoadOptions + 'a,
{
    manifest.entries.iter().map(move |entry| {
        let opts = opts_for(entry);
        CorpusItem {
            entry: entry.clone(),
            result: load_entry(manifest, entry, registry, &opts),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_with_hex_base() {
        let m = CorpusManifest::from_toml_str(
            r#"
            [[entry]]
            path = "a.bin"
            profile = "nordic"
            device = "nrf52832"
            base = "0x26000"

            [[entry]]
            path = "b.hex"
            format = "ihex"
            base = 4096
            "#,
            "/corpus",
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.entries[0].base, Some(0x26000));
        assert_eq!(m.entries[1].base, Some(0x1000));
        assert_eq!(m.resolve(&m.entries[0]), PathBuf::from("/corpus/a.bin"));
    }

    #[test]
    fn duplicate_paths_rejected() {
        let err = CorpusManifest::from_toml_str(
            "[[entry]]\npath = \"a\"\n[[entry]]\npath = \"a\"\n",
            ".",
        )
        .unwrap_err();
        assert!(matches!(err, ManifestError::DuplicatePath(p) if p == "a"));
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(CorpusManifest::from_toml_str("[[entry]]\npath = \"a\"\nbogus = 1\n", ".").is_err());
    }
}
