use std::fmt;

use super::{
    ihex, image_from_segments, load_raw, srec, FirmwareImage, IngestError, LoadOptions,
    SourceFormat,
};

/// A firmware container decoder.
pub trait ContainerFormat: Send + Sync {
    fn name(&self) -> &'static str;

    fn source_format(&self) -> SourceFormat;

    /// Cheap sniff of the leading bytes.
    fn probe(&self, bytes: &[u8]) -> bool;

    fn decode(&self, bytes: &[u8], opts: &LoadOptions) -> Result<FirmwareImage, IngestError>;
}

fn first_significant(bytes: &[u8]) -> Option<u8> {
    bytes.iter().copied().find(|b| !b.is_ascii_whitespace())
}

fn as_text(bytes: &[u8]) -> Result<&str, IngestError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        IngestError::BadHexDigit { line }
    })
}

pub struct IntelHexFormat;

impl ContainerFormat for IntelHexFormat {
    fn name(&self) -> &'static str {
        "ihex"
    }

    fn source_format(&self) -> SourceFormat {
        SourceFormat::IntelHex
    }

    fn probe(&self, bytes: &[u8]) -> bool {
        first_significant(bytes) == Some(b':')
    }

    fn decode(&self, bytes: &[u8], opts: &LoadOptions) -> Result<FirmwareImage, IngestError> {
        let segs = ihex::decode_intel_hex(as_text(bytes)?)?;
        image_from_segments(&segs, SourceFormat::IntelHex, opts)
    }
}

pub struct SRecordFormat;

impl ContainerFormat for SRecordFormat {
    fn name(&self) -> &'static str {
        "srec"
    }

    fn source_format(&self) -> SourceFormat {
        SourceFormat::Srecord
    }

    fn probe(&self, bytes: &[u8]) -> bool {
        first_significant(bytes) == Some(b'S')
    }

    fn decode(&self, bytes: &[u8], opts: &LoadOptions) -> Result<FirmwareImage, IngestError> {
        let segs = srec::decode_srecord(as_text(bytes)?)?;
        image_from_segments(&segs, SourceFormat::Srecord, opts)
    }
}

pub struct RawFormat;

impl ContainerFormat for RawFormat {
    fn name(&self) -> &'static str {
        "raw"
    }

    fn source_format(&self) -> SourceFormat {
        SourceFormat::Raw
    }

    fn probe(&self, _bytes: &[u8]) -> bool {
        true
    }

    fn decode(&self, bytes: &[u8], opts: &LoadOptions) -> Result<FirmwareImage, IngestError> {
        let mut img = load_raw(bytes, None)?;
        img.fill = opts.fill;
        Ok(img)
    }
}

/// Named container decoders, probed in registration order.
pub struct FormatRegistry {
    formats: Vec<Box<dyn ContainerFormat>>,
}

impl fmt::Debug for FormatRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl Default for FormatRegistry {
    fn default() -> Self {
        let mut reg = FormatRegistry::empty();
        reg.register(Box::new(IntelHexFormat));
        reg.register(Box::new(SRecordFormat));
        reg.register(Box::new(RawFormat));
        reg
    }
}

impl FormatRegistry {
    pub fn empty() -> Self {
        FormatRegistry {
            formats: Vec::new(),
        }
    }

    /// Add a decoder; a later registration with the same name replaces the
    /// earlier one in place.
    pub fn register(&mut self, format: Box<dyn ContainerFormat>) {
        match self.formats.iter().position(|f| f.name() == format.name()) {
            Some(i) => self.formats[i] = format,
            None => self.formats.push(format),
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.formats.iter().map(|f| f.name()).collect()
    }

    /// Look up by registered name or by source-format name
    /// (`ihex`/`intel_hex`, `srec`/`srecord`, `raw`).
    pub fn get(&self, name: &str) -> Option<&dyn ContainerFormat> {
        let name = name.trim().to_ascii_lowercase();
        self.formats
            .iter()
            .find(|f| f.name() == name || f.source_format().name() == name)
            .map(|f| f.as_ref())
    }

    pub fn detect(&self, bytes: &[u8]) -> Option<&dyn ContainerFormat> {
        self.formats
            .iter()
            .find(|f| f.probe(bytes))
            .map(|f| f.as_ref())
    }

    /// Decode with an explicit format name, or auto-detect when `hint` is
    /// `None`.
    pub fn decode(
        &self,
        bytes: &[u8],
        hint: Option<&str>,
        opts: &LoadOptions,
    ) -> Result<FirmwareImage, IngestError> {
        if bytes.is_empty() {
            return Err(IngestError::EmptyInput);
        }
        let format = match hint {
            Some(h) => self
                .get(h)
                .ok_or_else(|| IngestError::UnknownFormat(h.to_string()))?,
            None => self
                .detect(bytes)
                .ok_or_else(|| IngestError::UnknownFormat("<undetected>".into()))?,
        };
        log::debug!("decoding {} bytes as {}", bytes.len(), format.name());
        format.decode(bytes, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_order() {
        let reg = FormatRegistry::default();
        assert_eq!(reg.names(), ["ihex", "srec", "raw"]);
        assert_eq!(reg.detect(b":00000001FF").unwrap().name(), "ihex");
        assert_eq!(reg.detect(b"S00F000068656C6C6F").unwrap().name(), "srec");
        assert_eq!(reg.detect(&[0x00, 0x20, 0x00, 0x20]).unwrap().name(), "raw");
    }

    #[test]
    fn lookup_by_either_name() {
        let reg = FormatRegistry::default();
        assert_eq!(reg.get("intel_hex").unwrap().name(), "ihex");
        assert_eq!(reg.get("SREC").unwrap().name(), "srec");
        assert!(reg.get("cyacd").is_none());
    }

    #[test]
    fn hint_overrides_detection() {
        let reg = FormatRegistry::default();
        let img = reg
            .decode(b":00000001FF", Some("raw"), &LoadOptions::default())
            .unwrap();
        assert_eq!(img.source_format, SourceFormat::Raw);
        assert_eq!(img.len(), 11);
    }
}
