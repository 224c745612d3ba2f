use super::{AnalysisContext, Detail, Detector, Evidence, Feature, Finding, Prior, Verdict};

/// Vendor readback protection, decided from the profile's configuration
/// word. Does not need disassembly.
pub struct ReadbackDetector;

impl Detector for ReadbackDetector {
    fn name(&self) -> &'static str {
        "readback_protection"
    }

    fn features(&self) -> &'static [Feature] {
        &[Feature::ReadbackProtection]
    }

    fn needs_pipeline(&self) -> bool {
        false
    }

    fn detect(&self, ctx: &AnalysisContext<'_>, _: &Prior) -> Vec<Finding> {
        let f = Feature::ReadbackProtection;
        let Some(rb) = ctx.profile.readback else {
            return vec![Finding::new(
                f,
                Verdict::Absent,
                Vec::new(),
                Detail::Error {
                    message: format!("profile `{}` declares no readback mechanism", ctx.profile.id),
                },
            )];
        };
        let address = rb.address();
        let word = ctx.read_u32(address);
        let detail = Detail::Readback { address, word };
        let finding = match word {
            None => Finding::new(f, Verdict::Indeterminate, Vec::new(), detail),
            Some(w) if rb.is_enabled(w) => Finding::new(
                f,
                Verdict::Present,
                vec![Evidence::new(address, format!("configuration word {w:#010x} enables protection"))],
                detail,
            ),
            Some(w) => Finding::new(
                f,
                Verdict::Absent,
                vec![Evidence::new(address, format!("configuration word {w:#010x} leaves protection off"))],
                detail,
            ),
        };
        vec![finding]
    }
}
