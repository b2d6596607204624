use serde::{Deserialize, Serialize};

use super::{DatasetError, GraspRecord};

/// Weights on the rotation, translation and joint L1 terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Weights {
    pub rotation: f64,
    pub translation: f64,
    pub joints: f64,
}

impl Default for L1Weights {
    fn default() -> Self {
        L1Weights {
            rotation: 1.0,
            translation: 1.0,
            joints: 1.0,
        }
    }
}

impl L1Weights {
    /// Parses `r,t,j`.
    pub fn parse(s: &str) -> Option<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse().ok())
            .collect::<Option<_>>()?;
        match v[..] {
            [rotation, translation, joints]
                if v.iter().all(|w| *w >= 0.0 && w.is_finite()) =>
            {
                Some(L1Weights {
                    rotation,
                    translation,
                    joints,
                })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspEvalReport {
    pub rotation_l1: f64,
    pub translation_l1: f64,
    pub joint_l1: f64,
    /// `w_r * rotation_l1 + w_t * translation_l1 + w_j * joint_l1`.
    pub aggregate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keypoint_l1: Option<f64>,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Weighted L1 pose/joint error between a predicted and a reference grasp.
///
/// The predicted quaternion is sign-flipped onto the reference hemisphere
/// before differencing, so `q` and `-q` compare equal.
pub fn grasp_l1_error(
    pred: &GraspRecord,
    truth: &GraspRecord,
    weights: L1Weights,
) -> Result<GraspEvalReport, DatasetError> {
    if pred.hand_id != truth.hand_id {
        return Err(DatasetError::ProfileMismatch(format!(
            "'{}' vs '{}'",
            pred.hand_id, truth.hand_id
        )));
    }
    if pred.joints.len() != truth.joints.len() {
        return Err(DatasetError::ProfileMismatch(format!(
            "{} vs {} joints",
            pred.joints.len(),
            truth.joints.len()
        )));
    }
    let dot: f64 = pred.rotation.iter().zip(&truth.rotation).map(|(a, b)| a * b).sum();
    let sign = if dot < 0.0 { -1.0 } else { 1.0 };
    let aligned = pred.rotation.map(|c| c * sign);

    let rotation_l1 = l1(&aligned, &truth.rotation);
    let translation_l1 = l1(&pred.translation, &truth.translation);
    let joint_l1 = l1(&pred.joints, &truth.joints);
    Ok(GraspEvalReport {
        rotation_l1,
        translation_l1,
        joint_l1,
        aggregate: weights.rotation * rotation_l1
            + weights.translation * translation_l1
            + weights.joints * joint_l1,
        keypoint_l1: None,
    })
}

/// Keypoint reconstruction error: sum over points of the coordinate-wise L1
/// distance. `None` when the point counts differ.
pub fn keypoint_l1(pred: &[[f64; 3]], truth: &[[f64; 3]]) -> Option<f64> {
    if pred.len() != truth.len() {
        return None;
    }
    Some(pred.iter().zip(truth).map(|(p, t)| l1(p, t)).sum())
}
