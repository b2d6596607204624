use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DatasetError, DatasetManifest};

/// Train:test proportions, e.g. `8.5:1.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub train: f64,
    pub test: f64,
}

impl Default for SplitRatio {
    fn default() -> Self {
        SplitRatio {
            train: 8.5,
            test: 1.5,
        }
    }
}

impl SplitRatio {
    pub fn parse(s: &str) -> Result<Self, DatasetError> {
        let bad = || DatasetError::InvalidRatio(format!("'{s}' (expected TRAIN:TEST, e.g. 8.5:1.5)"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let train: f64 = a.trim().parse().map_err(|_| bad())?;
        let test: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(train >= 0.0 && test >= 0.0) || !(train + test > 0.0) || !(train + test).is_finite() {
            return Err(bad());
        }
        Ok(SplitRatio { train, test })
    }

    pub fn test_fraction(&self) -> f64 {
        self.test / (self.train + self.test)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitWarning {
    /// A non-empty category ended up with an empty train or test side.
    SmallCategory { category: String, objects: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub warnings: Vec<SplitWarning>,
}

fn rank_key(seed: u64, object_id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(object_id.as_bytes());
    h.finalize().into()
}

/// Object-level split, stratified per category. Within a category objects are
/// ordered by `sha256(seed || id)` and the first `floor(k * test_fraction)`
/// go to test. Both sides list ids in manifest order.
pub fn split_dataset(
    manifest: &DatasetManifest,
    seed: u64,
    ratio: SplitRatio,
) -> Result<Split, DatasetError> {
    if manifest.objects.is_empty() {
        return Err(DatasetError::EmptyManifest);
    }
    let frac = ratio.test_fraction();
    let mut by_category: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for o in &manifest.objects {
        by_category.entry(&o.category).or_default().push(&o.id);
    }
    let mut test_ids = BTreeSet::new();
    let mut warnings = Vec::new();
    for (category, mut ids) in by_category {
        let k = ids.len();
        let n_test = ((k as f64) * frac + 1e-9).floor() as usize;
        ids.sort_by_cached_key(|id| rank_key(seed, id));
        test_ids.extend(ids.into_iter().take(n_test));
        if (n_test == 0 && frac > 0.0) || (n_test == k && frac < 1.0) {
            warnings.push(SplitWarning::SmallCategory {
                category: category.to_string(),
                objects: k,
            });
        }
    }
    let (test, train): (Vec<_>, Vec<_>) = manifest
        .objects
        .iter()
        .map(|o| o.id.clone())
        .partition(|id| test_ids.contains(id.as_str()));
    Ok(Split {
        train,
        test,
        warnings,
    })
}
