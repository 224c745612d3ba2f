use crate::detectors::Feature;

use super::aggregate::{CorpusSummary, GroupSummary};

/// `hundredths` as a percentage with two decimals.
pub fn format_percent(hundredths: Option<u64>) -> String {
    match hundredths {
        Some(h) => format!("{}.{:02}%", h / 100, h % 100),
        None => "-".to_string(),
    }
}

fn cell(g: &GroupSummary, f: Feature) -> String {
    let c = g.counts(f);
    format!(
        "{:>4} {:>4} {:>8}",
        c.present,
        c.present_devices.len(),
        format_percent(c.percent_hundredths(f))
    )
}

/// Fixed-width table: one row per feature, one column per vendor profile
/// plus Total. Cells are `#F #D percent`; rows marked `*` exclude
/// indeterminate images from the percentage.
pub fn to_table(summary: &CorpusSummary) -> String {
    let mut cols: Vec<(&str, &GroupSummary)> = summary.groups.iter().map(|(k, g)| (k.as_str(), g)).collect();
    cols.push(("Total", &summary.total));
    let label_w = Feature::ALL.iter().map(|f| f.title().len() + 1).max().unwrap_or(0).max(16);
    const CELL_W: usize = 18;
    let mut out = String::new();
    out.push_str(&format!("{:<label_w$}", "Security Feature"));
    for (name, _) in &cols {
        out.push_str(&format!(" | {name:^CELL_W$}"));
    }
    out.push('\n');
    out.push_str(&format!("{:<label_w$}", ""));
    for _ in &cols {
        out.push_str(&format!(" | {:>4} {:>4} {:>8}", "#F", "#D", "%"));
    }
    out.push('\n');
    out.push_str(&"-".repeat(label_w + cols.len() * (CELL_W + 3)));
    out.push('\n');
    out.push_str(&format!("{:<label_w$}", "Firmware"));
    for (_, g) in &cols {
        out.push_str(&format!(" | {:>4} {:>4} {:>8}", g.images, g.devices.len(), ""));
    }
    out.push('\n');
    for f in Feature::ALL {
        let mark = if f.excludes_indeterminate() { "*" } else { "" };
        out.push_str(&format!("{:<label_w$}", format!("{}{mark}", f.title())));
        for (_, g) in &cols {
            out.push_str(&format!(" | {}", cell(g, f)));
        }
        out.push('\n');
    }
    out.push_str("* percentage over images where the feature applies\n");
    out
}
