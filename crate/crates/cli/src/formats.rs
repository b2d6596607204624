//! Line formats exchanged between subcommands.

use serde::{Deserialize, Serialize};

/// `angles` output and `retarget` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnglesLine {
    pub frame_index: u64,
    /// `[abduction, mcp, pip, dip]` for thumb, index, middle, ring, little.
    pub angles: Vec<f64>,
}

/// `retarget` output and `actuate` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointsLine {
    pub frame_index: u64,
    pub joints: Vec<f64>,
    /// Joints clamped to a limit.
    #[serde(default)]
    pub saturated: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorsLine {
    pub frame_index: u64,
    pub u: Vec<f64>,
    pub saturated: Vec<bool>,
    pub residual: f64,
    pub inconsistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitLine {
    /// Robot joints x human angles, row major.
    pub gains: Vec<Vec<f64>>,
    pub error: f64,
    pub sample_residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitLine {
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointEvalLine {
    pub frame_index: u64,
    pub keypoint_l1: f64,
}
