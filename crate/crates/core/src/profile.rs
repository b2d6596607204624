//! Robot hand profiles: joint layout and limits, the retargeting blocks, and
//! the actuator coupling, loaded from a TOML file.
//!
//! ```toml
//! hand_id = "inspire_hand"
//! bias = [0.0, ...]            # optional, one per robot joint
//!
//! [[fingers]]
//! name = "index"
//! human = "index"              # human finger feeding this block
//! gains = [[0.0, 0.3530, 0.4310, 0.2827],
//!          [0.0, 0.2584, 0.4130, -0.0018]]
//! joints = [{ name = "index_proximal", lower = 0.0, upper = 1.47 },
//!           { name = "index_distal", lower = 0.0, upper = 1.6 }]
//!
//! [[actuators]]
//! name = "index"
//! lower = 0.0
//! upper = 1.47
//!
//! [[coupling]]
//! joint = "index_proximal"
//! actuator = "index"
//! gain = 1.0
//! ```
//!
//! `fully_actuated = true` replaces the actuator and coupling tables with one
//! unit-gain actuator per joint, limited like the joint.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DVector;
use serde::Deserialize;
use thiserror::Error;

use crate::actuation::{
    joints_to_actuators, ActuationError, ActuatorCommand, ActuatorLimit, CouplingMatrix,
};
use crate::kinematics::{Finger, HumanHandAngles};
use crate::retarget::{
    apply_mapping, clamp_to_limits, Clamped, FingerBlock, JointLimit, MappingMatrix,
    RetargetError, RobotHandAngles,
};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("reading profile {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing profile: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mapping(#[from] RetargetError),
    #[error(transparent)]
    Coupling(#[from] ActuationError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    hand_id: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    fully_actuated: bool,
    #[serde(default)]
    human_dims: Option<[usize; 5]>,
    #[serde(default)]
    bias: Option<Vec<f64>>,
    fingers: Vec<FingerFile>,
    #[serde(default)]
    actuators: Vec<ActuatorFile>,
    #[serde(default)]
    coupling: Vec<CouplingFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerFile {
    name: String,
    human: Finger,
    gains: Vec<Vec<f64>>,
    joints: Vec<JointFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    name: String,
    lower: f64,
    upper: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActuatorFile {
    name: String,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingFile {
    joint: String,
    actuator: String,
    gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotFinger {
    pub name: String,
    pub human: Finger,
    /// Indices into the profile's joint vector.
    pub joints: std::ops::Range<usize>,
}

/// Retargeted joint angles before and after limit clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct Retargeted {
    pub raw: RobotHandAngles,
    pub clamped: Clamped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandProfile {
    pub hand_id: String,
    pub description: Option<String>,
    pub fingers: Vec<RobotFinger>,
    pub joint_names: Vec<String>,
    pub joint_limits: Vec<JointLimit>,
    pub mapping: MappingMatrix,
    pub coupling: CouplingMatrix,
}

impl HandProfile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProfileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ProfileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ProfileError> {
        let file: ProfileFile = toml::from_str(text)?;
        Self::from_file(file)
    }

    fn from_file(file: ProfileFile) -> Result<Self, ProfileError> {
        let invalid = |m: String| Err(ProfileError::Invalid(m));
        if file.hand_id.trim().is_empty() {
            return invalid("empty hand_id".into());
        }
        if file.fingers.is_empty() {
            return invalid("no fingers".into());
        }
        let human_dims = file.human_dims.unwrap_or([4; 5]);

        let mut fingers = Vec::new();
        let mut joint_names = Vec::new();
        let mut joint_limits = Vec::new();
        let mut blocks = Vec::new();
        for f in &file.fingers {
            if f.gains.len() != f.joints.len() {
                return invalid(format!(
                    "finger '{}' has {} gain rows for {} joints",
                    f.name,
                    f.gains.len(),
                    f.joints.len()
                ));
            }
            let start = joint_names.len();
            for j in &f.joints {
                if !(j.lower <= j.upper) || !j.lower.is_finite() || !j.upper.is_finite() {
                    return invalid(format!("joint '{}' has invalid limits", j.name));
                }
                if joint_names.contains(&j.name) {
                    return invalid(format!("duplicate joint '{}'", j.name));
                }
                joint_names.push(j.name.clone());
                joint_limits.push(JointLimit {
                    lower: j.lower,
                    upper: j.upper,
                });
            }
            blocks.push(FingerBlock::from_rows(f.human, &f.gains)?);
            fingers.push(RobotFinger {
                name: f.name.clone(),
                human: f.human,
                joints: start..joint_names.len(),
            });
        }
        let bias = file.bias.map(DVector::from_vec);
        let mapping = MappingMatrix::new(human_dims, blocks, bias)?;

        let d_rh = joint_names.len();
        let coupling = if file.fully_actuated {
            if !file.actuators.is_empty() || !file.coupling.is_empty() {
                return invalid("fully_actuated profiles must not list actuators or coupling".into());
            }
            let limits = joint_limits
                .iter()
                .map(|l| {
                    Some(ActuatorLimit {
                        lower: l.lower,
                        upper: l.upper,
                    })
                })
                .collect();
            let triples: Vec<_> = (0..d_rh).map(|i| (i, i, 1.0)).collect();
            CouplingMatrix::from_triples(d_rh, joint_names.clone(), limits, &triples)?
        } else {
            if file.actuators.is_empty() {
                return invalid("no actuators (set fully_actuated = true for direct drive)".into());
            }
            let joint_index: HashMap<&str, usize> = joint_names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.as_str(), i))
                .collect();
            let mut names = Vec::new();
            let mut limits = Vec::new();
            for a in &file.actuators {
                if names.contains(&a.name) {
                    return invalid(format!("duplicate actuator '{}'", a.name));
                }
                names.push(a.name.clone());
                limits.push(match (a.lower, a.upper) {
                    (Some(lower), Some(upper)) => Some(ActuatorLimit { lower, upper }),
                    (None, None) => None,
                    _ => return invalid(format!("actuator '{}' needs both limits or neither", a.name)),
                });
            }
            let mut triples = Vec::new();
            for c in &file.coupling {
                let Some(&j) = joint_index.get(c.joint.as_str()) else {
                    return invalid(format!("coupling names unknown joint '{}'", c.joint));
                };
                let Some(a) = names.iter().position(|n| n == &c.actuator) else {
                    return invalid(format!("coupling names unknown actuator '{}'", c.actuator));
                };
                triples.push((j, a, c.gain));
            }
            CouplingMatrix::from_triples(d_rh, names, limits, &triples)?
        };

        Ok(HandProfile {
            hand_id: file.hand_id,
            description: file.description,
            fingers,
            joint_names,
            joint_limits,
            mapping,
            coupling,
        })
    }

    pub fn d_rh(&self) -> usize {
        self.joint_names.len()
    }

    pub fn retarget(&self, human: &HumanHandAngles) -> Result<Retargeted, RetargetError> {
        let raw = apply_mapping(human, &self.mapping)?;
        let clamped = clamp_to_limits(&raw, &self.joint_limits)?;
        Ok(Retargeted { raw, clamped })
    }

    pub fn actuate(&self, theta: &RobotHandAngles) -> Result<ActuatorCommand, ActuationError> {
        joints_to_actuators(theta, &self.coupling)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_JOINT: &str = r#"
hand_id = "toy"

[[fingers]]
name = "index"
human = "index"
gains = [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]
joints = [{ name = "p", lower = 0.0, upper = 1.0 }, { name = "d", lower = 0.0, upper = 2.0 }]

[[actuators]]
name = "drive"
lower = 0.0
upper = 1.0

[[coupling]]
joint = "p"
actuator = "drive"
gain = 1.0

[[coupling]]
joint = "d"
actuator = "drive"
gain = 2.0
"#;

    #[test]
    fn parses_toy_profile() {
        let p = HandProfile::from_toml_str(TWO_JOINT).unwrap();
        assert_eq!(p.d_rh(), 2);
        assert_eq!(p.coupling.actuators(), 1);
        assert_eq!(p.coupling.matrix()[(1, 0)], 2.0);
        assert_eq!(p.fingers[0].joints, 0..2);
    }

    #[test]
    fn retarget_clamps() {
        let p = HandProfile::from_toml_str(TWO_JOINT).unwrap();
        let mut v = [0.0; 20];
        v[5] = 1.5;
        v[6] = 0.5;
        let human = HumanHandAngles::from_slice(&v, [4; 5]).unwrap();
        let r = p.retarget(&human).unwrap();
        assert_eq!(r.raw.0, vec![1.5, 0.5]);
        assert_eq!(r.clamped.angles.0, vec![1.0, 0.5]);
        assert_eq!(r.clamped.saturated, vec![0]);
    }

    #[test]
    fn fully_actuated_shorthand() {
        let text = r#"
hand_id = "direct"
fully_actuated = true
[[fingers]]
name = "index"
human = "index"
gains = [[1.0, 0.0, 0.0, 0.0]]
joints = [{ name = "j", lower = -1.0, upper = 1.0 }]
"#;
        let p = HandProfile::from_toml_str(text).unwrap();
        assert_eq!(p.coupling.actuators(), 1);
        assert_eq!(p.coupling.limits()[0], Some(ActuatorLimit { lower: -1.0, upper: 1.0 }));
    }

    #[test]
    fn rejects_unknown_coupling_joint() {
        let bad = TWO_JOINT.replace("joint = \"d\"", "joint = \"nope\"");
        assert!(matches!(
            HandProfile::from_toml_str(&bad),
            Err(ProfileError::Invalid(_))
        ));
    }

    #[test]
    fn rejects_row_count_mismatch() {
        let bad = TWO_JOINT.replace(", [0.0, 0.0, 1.0, 0.0]]", "]");
        assert!(HandProfile::from_toml_str(&bad).is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = format!("{TWO_JOINT}\nmystery = 3\n");
        assert!(matches!(HandProfile::from_toml_str(&bad), Err(ProfileError::Parse(_))));
    }
}
