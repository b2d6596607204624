//! Grasp annotation records and the dataset tooling around them.

mod annotate;
mod eval;
mod split;
mod stats;

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use annotate::{
    annotate_frame, annotate_stream, palm_pose, AnnotateOptions, AnnotatedFrame, Annotation,
    ObjectMeta, SkippedFrame,
};
pub use eval::{grasp_l1_error, keypoint_l1, GraspEvalReport, L1Weights};
pub use split::{split_dataset, Split, SplitRatio, SplitWarning};
pub use stats::{dataset_stats, CategoryStats, DatasetStats};

/// Quaternion norms further than this from 1 are renormalized and flagged.
pub const QUAT_RENORM_TOL: f64 = 1e-6;
/// Quaternion norms further than this from 1 are rejected.
pub const QUAT_REJECT_TOL: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("records reference different profiles: {0}")]
    ProfileMismatch(String),
    #[error("quaternion norm {0} is too far from 1")]
    BadQuaternion(f64),
    #[error("empty manifest")]
    EmptyManifest,
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("invalid split ratio: {0}")]
    InvalidRatio(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing manifest: {0}")]
    ManifestParse(#[from] toml::de::Error),
}

/// Force-closure summary stored with a record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureSummary {
    pub closed: bool,
    pub margin: f64,
}

/// One grasp annotation. Rotation is a unit quaternion `[w, x, y, z]`
/// (Hamilton, scalar first); `closure` is `null` for unvalidated grasps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspRecord {
    pub object_id: String,
    pub category: String,
    pub hand_id: String,
    #[serde(rename = "R")]
    pub rotation: [f64; 4],
    #[serde(rename = "T")]
    pub translation: [f64; 3],
    #[serde(rename = "Q")]
    pub joints: Vec<f64>,
    pub closure: Option<ClosureSummary>,
    pub source_frame: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuaternionCheck {
    Unit,
    Renormalized,
}

impl GraspRecord {
    /// Enforces the unit-quaternion invariant in place.
    pub fn normalize_rotation(&mut self) -> Result<QuaternionCheck, DatasetError> {
        let norm = self.rotation.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > QUAT_REJECT_TOL {
            return Err(DatasetError::BadQuaternion(norm));
        }
        if (norm - 1.0).abs() > QUAT_RENORM_TOL {
            for c in &mut self.rotation {
                *c /= norm;
            }
            return Ok(QuaternionCheck::Renormalized);
        }
        Ok(QuaternionCheck::Unit)
    }
}

/// Result of ingesting a record file: malformed or rejected lines are kept
/// aside rather than aborting the read.
#[derive(Debug, Default)]
pub struct RecordSet {
    pub records: Vec<GraspRecord>,
    /// 1-based line numbers whose quaternion was renormalized.
    pub renormalized: Vec<usize>,
    /// `(line, reason)` for lines that could not be accepted.
    pub rejected: Vec<(usize, String)>,
}

pub fn read_records(reader: impl BufRead) -> std::io::Result<RecordSet> {
    let mut set = RecordSet::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: GraspRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                set.rejected.push((lineno, e.to_string()));
                continue;
            }
        };
        match rec.normalize_rotation() {
            Ok(QuaternionCheck::Unit) => {}
            Ok(QuaternionCheck::Renormalized) => set.renormalized.push(lineno),
            Err(e) => {
                set.rejected.push((lineno, e.to_string()));
                continue;
            }
        }
        set.records.push(rec);
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestObject {
    pub id: String,
    pub category: String,
}

/// Category list and object inventory, loaded from TOML:
///
/// ```toml
/// categories = ["bottle", "mug"]
/// split = "8.5:1.5"
///
/// [[objects]]
/// id = "bottle_000"
/// category = "bottle"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    #[serde(default)]
    pub objects: Vec<ManifestObject>,
}

impl DatasetManifest {
    pub fn new(categories: Vec<String>, objects: Vec<ManifestObject>) -> Result<Self, DatasetError> {
        let m = DatasetManifest {
            categories,
            split: None,
            objects,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DatasetError> {
        let m: DatasetManifest = toml::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut cats = std::collections::BTreeSet::new();
        for c in &self.categories {
            if !cats.insert(c.as_str()) {
                return Err(DatasetError::InvalidManifest(format!("duplicate category '{c}'")));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for o in &self.objects {
            if !cats.contains(o.category.as_str()) {
                return Err(DatasetError::InvalidManifest(format!(
                    "object '{}' has undeclared category '{}'",
                    o.id, o.category
                )));
            }
            if !ids.insert(o.id.as_str()) {
                return Err(DatasetError::InvalidManifest(format!("duplicate object '{}'", o.id)));
            }
        }
        if let Some(s) = &self.split {
            SplitRatio::parse(s)?;
        }
        Ok(())
    }

    pub fn split_ratio(&self) -> Result<SplitRatio, DatasetError> {
        match &self.split {
            Some(s) => SplitRatio::parse(s),
            None => Ok(SplitRatio::default()),
        }
    }

    pub fn category_of(&self, object_id: &str) -> Option<&str> {
        self.objects
            .iter()
            .find(|o| o.id == object_id)
            .map(|o| o.category.as_str())
    }

    /// Number of declared objects per category, including empty categories.
    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut counts: BTreeMap<String, usize> =
            self.categories.iter().map(|c| (c.clone(), 0)).collect();
        for o in &self.objects {
            *counts.entry(o.category.clone()).or_default() += 1;
        }
        counts
    }
}
