use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{DatasetManifest, GraspRecord};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    /// Objects declared in the manifest.
    pub objects: usize,
    /// Declared objects with at least one grasp.
    pub annotated_objects: usize,
    pub grasps: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_grasps: usize,
    pub malformed_lines: usize,
    pub per_category: BTreeMap<String, CategoryStats>,
    pub per_object: BTreeMap<String, usize>,
    pub per_hand: BTreeMap<String, usize>,
    /// Records whose object is not in the manifest or whose category
    /// disagrees with it.
    pub unknown_objects: usize,
    pub validated: usize,
    pub closed: usize,
    /// `closed / validated`; `None` when nothing was validated.
    pub pass_rate: Option<f64>,
}

pub fn dataset_stats(
    records: &[GraspRecord],
    malformed_lines: usize,
    manifest: &DatasetManifest,
) -> DatasetStats {
    let mut stats = DatasetStats {
        malformed_lines,
        ..Default::default()
    };
    for (cat, n) in manifest.counts() {
        stats.per_category.insert(
            cat,
            CategoryStats {
                objects: n,
                ..Default::default()
            },
        );
    }
    let category_of: HashMap<&str, &str> = manifest
        .objects
        .iter()
        .map(|o| (o.id.as_str(), o.category.as_str()))
        .collect();
    let mut annotated: BTreeSet<&str> = BTreeSet::new();
    for r in records {
        stats.total_grasps += 1;
        *stats.per_object.entry(r.object_id.clone()).or_default() += 1;
        *stats.per_hand.entry(r.hand_id.clone()).or_default() += 1;
        match category_of.get(r.object_id.as_str()) {
            Some(&cat) if cat == r.category => {
                let c = stats.per_category.entry(cat.to_string()).or_default();
                c.grasps += 1;
                if annotated.insert(&r.object_id) {
                    c.annotated_objects += 1;
                }
            }
            _ => stats.unknown_objects += 1,
        }
        if let Some(cl) = r.closure {
            stats.validated += 1;
            if cl.closed {
                stats.closed += 1;
            }
        }
    }
    if stats.validated > 0 {
        stats.pass_rate = Some(stats.closed as f64 / stats.validated as f64);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ClosureSummary, ManifestObject};

    fn manifest() -> DatasetManifest {
        DatasetManifest::new(
            vec!["mug".into(), "drill".into()],
            vec![
                ManifestObject { id: "m1".into(), category: "mug".into() },
                ManifestObject { id: "m2".into(), category: "mug".into() },
                ManifestObject { id: "d1".into(), category: "drill".into() },
            ],
        )
        .unwrap()
    }

    fn rec(object: &str, category: &str, closed: Option<bool>) -> GraspRecord {
        GraspRecord {
            object_id: object.into(),
            category: category.into(),
            hand_id: "inspire_hand".into(),
            rotation: [1.0, 0.0, 0.0, 0.0],
            translation: [0.0; 3],
            joints: vec![0.0; 12],
            closure: closed.map(|closed| ClosureSummary { closed, margin: 0.0 }),
            source_frame: 0,
        }
    }

    #[test]
    fn empty() {
        let s = dataset_stats(&[], 0, &manifest());
        assert_eq!(s.total_grasps, 0);
        assert_eq!(s.validated, 0);
        assert_eq!(s.pass_rate, None);
        assert!(s.per_category.values().all(|c| c.grasps == 0 && c.annotated_objects == 0));
    }

    #[test]
    fn three_objects_two_grasps() {
        let mut recs = Vec::new();
        for (o, c) in [("m1", "mug"), ("m2", "mug"), ("d1", "drill")] {
            recs.push(rec(o, c, None));
            recs.push(rec(o, c, None));
        }
        let s = dataset_stats(&recs, 0, &manifest());
        assert_eq!(s.total_grasps, 6);
        assert!(s.per_object.values().all(|&n| n == 2));
        assert_eq!(s.per_category["mug"].grasps, 4);
        assert_eq!(s.per_category["mug"].annotated_objects, 2);
        assert_eq!(s.per_hand["inspire_hand"], 6);
    }

    #[test]
    fn pass_rate() {
        let recs = vec![
            rec("m1", "mug", Some(true)),
            rec("m1", "mug", Some(true)),
            rec("m2", "mug", Some(false)),
            rec("d1", "drill", Some(true)),
            rec("d1", "drill", None),
        ];
        let s = dataset_stats(&recs, 2, &manifest());
        assert_eq!(s.validated, 4);
        assert_eq!(s.pass_rate, Some(0.75));
        assert_eq!(s.malformed_lines, 2);
    }

    #[test]
    fn unknown_object_counted() {
        let s = dataset_stats(&[rec("x9", "mug", None), rec("m1", "drill", None)], 0, &manifest());
        assert_eq!(s.unknown_objects, 2);
    }
}
