use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detectors::{Feature, FeatureMatrix, Verdict};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("corpus is empty")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCounts {
    pub present: usize,
    pub absent: usize,
    pub indeterminate: usize,
    /// Devices with at least one image where the feature is present.
    pub present_devices: BTreeSet<String>,
}

impl FeatureCounts {
    pub fn total(&self) -> usize {
        self.present + self.absent + self.indeterminate
    }

    /// Images the percentage is taken over.
    pub fn applicable(&self, feature: Feature) -> usize {
        if feature.excludes_indeterminate() {
            self.present + self.absent
        } else {
            self.total()
        }
    }

    /// Percentage of applicable images in hundredths, rounded half up;
    /// `None` when nothing is applicable.
    pub fn percent_hundredths(&self, feature: Feature) -> Option<u64> {
        let n = self.applicable(feature) as u64;
        (n > 0).then(|| (self.present as u64 * 20_000 + n) / (2 * n))
    }

    fn merge(&mut self, other: &FeatureCounts) {
        self.present += other.present;
        self.absent += other.absent;
        self.indeterminate += other.indeterminate;
        self.present_devices.extend(other.present_devices.iter().cloned());
    }
}

/// Counts for one group of images.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub images: usize,
    pub devices: BTreeSet<String>,
    pub features: BTreeMap<Feature, FeatureCounts>,
}

impl GroupSummary {
    fn add(&mut self, m: &FeatureMatrix) {
        let device = device_key(m);
        self.images += 1;
        self.devices.insert(device.clone());
        for f in Feature::ALL {
            let c = self.features.entry(f).or_default();
            match m.verdict(f) {
                Verdict::Present => {
                    c.present += 1;
                    c.present_devices.insert(device.clone());
                }
                Verdict::Absent => c.absent += 1,
                Verdict::Indeterminate => c.indeterminate += 1,
            }
        }
    }

    fn merge(&mut self, other: &GroupSummary) {
        self.images += other.images;
        self.devices.extend(other.devices.iter().cloned());
        for (f, c) in &other.features {
            self.features.entry(*f).or_default().merge(c);
        }
    }

    pub fn counts(&self, f: Feature) -> FeatureCounts {
        self.features.get(&f).cloned().unwrap_or_default()
    }
}

/// Without a device id, each image is its own device.
fn device_key(m: &FeatureMatrix) -> String {
    match &m.device {
        Some(d) => format!("device:{d}"),
        None => format!("image:{}", m.image_id),
    }
}

/// Corpus counts by vendor profile, plus totals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub groups: BTreeMap<String, GroupSummary>,
    pub total: GroupSummary,
}

impl CorpusSummary {
    pub fn from_matrix(m: &FeatureMatrix) -> Self {
        let mut g = GroupSummary::default();
        g.add(m);
        CorpusSummary {
            groups: BTreeMap::from([(m.profile.clone(), g.clone())]),
            total: g,
        }
    }

    /// Associative, commutative combination of two summaries.
    pub fn merge(mut self, other: &CorpusSummary) -> Self {
        for (k, g) in &other.groups {
            self.groups.entry(k.clone()).or_default().merge(g);
        }
        self.total.merge(&other.total);
        self
    }
}

pub fn aggregate(matrices: &[FeatureMatrix]) -> Result<CorpusSummary, AggregateError> {
    if matrices.is_empty() {
        return Err(AggregateError::EmptyCorpus);
    }
    Ok(matrices
        .iter()
        .fold(CorpusSummary::default(), |acc, m| acc.merge(&CorpusSummary::from_matrix(m))))
}
