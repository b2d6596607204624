//! Linear human-to-robot joint retargeting.
//!
//! The mapping matrix is block-diagonal: each robot finger reads the angles of
//! exactly one human finger through a dense gain block, plus a constant
//! per-joint bias.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{Finger, HumanHandAngles, HUMAN_DOF};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetargetError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("rank-deficient calibration set ({samples} samples, {human_dof} human DoF, rank {rank})")]
    RankDeficient {
        samples: usize,
        human_dof: usize,
        rank: usize,
    },
    #[error("invalid calibration set: {0}")]
    InvalidCalibration(String),
}

/// Gains from one human finger to one robot finger.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerBlock {
    pub human: Finger,
    /// Robot-finger joints x human-finger angles.
    pub gains: DMatrix<f64>,
}

impl FingerBlock {
    pub fn new(human: Finger, gains: DMatrix<f64>) -> Self {
        FingerBlock { human, gains }
    }

    /// Builds a block from row slices.
    pub fn from_rows(human: Finger, rows: &[Vec<f64>]) -> Result<Self, RetargetError> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(RetargetError::InvalidMapping(format!(
                "{human} block rows must be non-empty and of equal length"
            )));
        }
        Ok(FingerBlock {
            human,
            gains: DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]),
        })
    }
}

/// The index-finger gains for the InspireHand, acting on the three human
/// index flexion angles (MCP, PIP, DIP).
pub const INSPIRE_INDEX_GAINS: [[f64; 3]; 2] = [[0.3530, 0.4310, 0.2827], [0.2584, 0.4130, -0.0018]];

/// Block-diagonal joint mapping `theta_robot = W * theta_human + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingMatrix {
    human_dims: [usize; 5],
    blocks: Vec<FingerBlock>,
    bias: DVector<f64>,
    dense: DMatrix<f64>,
}

impl MappingMatrix {
    /// Robot rows are laid out in block order. Each human finger may feed at
    /// most one block.
    pub fn new(
        human_dims: [usize; 5],
        blocks: Vec<FingerBlock>,
        bias: Option<DVector<f64>>,
    ) -> Result<Self, RetargetError> {
        let d_hh: usize = human_dims.iter().sum();
        if d_hh != HUMAN_DOF {
            return Err(RetargetError::InvalidMapping(format!(
                "human finger sizes sum to {d_hh}, expected {HUMAN_DOF}"
            )));
        }
        if blocks.is_empty() {
            return Err(RetargetError::InvalidMapping("no finger blocks".into()));
        }
        let mut used = [false; 5];
        for b in &blocks {
            let h = b.human.index();
            if used[h] {
                return Err(RetargetError::InvalidMapping(format!(
                    "human {} feeds more than one block",
                    b.human
                )));
            }
            used[h] = true;
            if b.gains.ncols() != human_dims[h] {
                return Err(RetargetError::InvalidMapping(format!(
                    "{} block has {} columns, human finger has {} angles",
                    b.human,
                    b.gains.ncols(),
                    human_dims[h]
                )));
            }
            if b.gains.nrows() == 0 {
                return Err(RetargetError::InvalidMapping(format!("{} block has no rows", b.human)));
            }
            if b.gains.iter().any(|g| !g.is_finite()) {
                return Err(RetargetError::InvalidMapping(format!(
                    "{} block has non-finite gains",
                    b.human
                )));
            }
        }
        let d_rh: usize = blocks.iter().map(|b| b.gains.nrows()).sum();
        let bias = bias.unwrap_or_else(|| DVector::zeros(d_rh));
        if bias.len() != d_rh {
            return Err(RetargetError::InvalidMapping(format!(
                "bias has length {}, expected {d_rh}",
                bias.len()
            )));
        }
        if bias.iter().any(|e| !e.is_finite()) {
            return Err(RetargetError::InvalidMapping("bias is not finite".into()));
        }

        let col_offsets = column_offsets(&human_dims);
        let mut dense = DMatrix::zeros(d_rh, d_hh);
        let mut row = 0;
        for b in &blocks {
            let col = col_offsets[b.human.index()];
            dense
                .view_mut((row, col), b.gains.shape())
                .copy_from(&b.gains);
            row += b.gains.nrows();
        }
        Ok(MappingMatrix {
            human_dims,
            blocks,
            bias,
            dense,
        })
    }

    /// Square identity map for a robot hand with the human joint layout.
    pub fn identity(human_dims: [usize; 5]) -> Result<Self, RetargetError> {
        let blocks = Finger::ALL
            .iter()
            .map(|&f| FingerBlock::new(f, DMatrix::identity(human_dims[f.index()], human_dims[f.index()])))
            .collect();
        Self::new(human_dims, blocks, None)
    }

    pub fn d_rh(&self) -> usize {
        self.dense.nrows()
    }

    pub fn d_hh(&self) -> usize {
        self.dense.ncols()
    }

    pub fn human_dims(&self) -> [usize; 5] {
        self.human_dims
    }

    pub fn blocks(&self) -> &[FingerBlock] {
        &self.blocks
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    /// The assembled `d_rh x d_hh` matrix.
    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }
}

fn column_offsets(dims: &[usize; 5]) -> [usize; 5] {
    let mut acc = 0;
    dims.map(|d| {
        let o = acc;
        acc += d;
        o
    })
}

/// Robot joint angles (radians), ordered as the profile's joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RobotHandAngles(pub Vec<f64>);

impl RobotHandAngles {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }
}

/// `W * theta + bias`, without joint-limit clamping.
pub fn apply_mapping(
    human: &HumanHandAngles,
    w: &MappingMatrix,
) -> Result<RobotHandAngles, RetargetError> {
    if human.finger_dims() != w.human_dims {
        return Err(RetargetError::DimensionMismatch(format!(
            "human angles have finger sizes {:?}, mapping expects {:?}",
            human.finger_dims(),
            w.human_dims
        )));
    }
    let theta = DVector::from_vec(human.to_vec());
    let out = &w.dense * theta + &w.bias;
    Ok(RobotHandAngles(out.as_slice().to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimit {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clamped {
    pub angles: RobotHandAngles,
    /// Indices of joints that hit a limit.
    pub saturated: Vec<usize>,
}

pub fn clamp_to_limits(
    angles: &RobotHandAngles,
    limits: &[JointLimit],
) -> Result<Clamped, RetargetError> {
    if angles.len() != limits.len() {
        return Err(RetargetError::DimensionMismatch(format!(
            "{} angles, {} limits",
            angles.len(),
            limits.len()
        )));
    }
    let mut saturated = Vec::new();
    let clamped = angles
        .0
        .iter()
        .zip(limits)
        .enumerate()
        .map(|(i, (&a, l))| {
            let c = a.clamp(l.lower, l.upper);
            if c != a {
                saturated.push(i);
            }
            c
        })
        .collect();
    Ok(Clamped {
        angles: RobotHandAngles(clamped),
        saturated,
    })
}

/// Paired human/robot angle samples for a single finger.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub samples: Vec<CalibrationSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub human: Vec<f64>,
    pub robot: Vec<f64>,
}

impl CalibrationSet {
    pub fn new(samples: Vec<CalibrationSample>) -> Result<Self, RetargetError> {
        let set = CalibrationSet { samples };
        set.dims()?;
        Ok(set)
    }

    /// `(human_dof, robot_dof)` shared by every sample.
    pub fn dims(&self) -> Result<(usize, usize), RetargetError> {
        let first = self
            .samples
            .first()
            .ok_or_else(|| RetargetError::InvalidCalibration("no samples".into()))?;
        let (h, r) = (first.human.len(), first.robot.len());
        if h == 0 || r == 0 {
            return Err(RetargetError::InvalidCalibration("empty sample vectors".into()));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.human.len() != h || s.robot.len() != r {
                return Err(RetargetError::InvalidCalibration(format!(
                    "sample {i} has shape ({}, {}), expected ({h}, {r})",
                    s.human.len(),
                    s.robot.len()
                )));
            }
            if s.human.iter().chain(&s.robot).any(|v| !v.is_finite()) {
                return Err(RetargetError::InvalidCalibration(format!(
                    "sample {i} is not finite"
                )));
            }
        }
        Ok((h, r))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingFit {
    /// Robot DoF x human DoF.
    pub gains: DMatrix<f64>,
    /// Per-sample root-mean-square residual.
    pub sample_residuals: Vec<f64>,
    /// Aggregate error of the fitted predictions, see [`mapping_error`].
    pub error: f64,
}

const RANK_RTOL: f64 = 1e-12;

/// Least-squares fit of one finger block,
/// `argmin_W sum ||robot - W human||^2 + ridge ||W||^2`.
///
/// Solved through an SVD of the (ridge-augmented) design matrix.
pub fn fit_mapping(cal: &CalibrationSet, ridge: f64) -> Result<MappingFit, RetargetError> {
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(RetargetError::InvalidCalibration(format!(
            "ridge must be a non-negative number, got {ridge}"
        )));
    }
    let (h, r) = cal.dims()?;
    let n = cal.len();
    let extra = if ridge > 0.0 { h } else { 0 };

    let mut x = DMatrix::zeros(n + extra, h);
    let mut y = DMatrix::zeros(n + extra, r);
    for (i, s) in cal.samples.iter().enumerate() {
        x.row_mut(i).copy_from_slice(&s.human);
        y.row_mut(i).copy_from_slice(&s.robot);
    }
    if ridge > 0.0 {
        let s = ridge.sqrt();
        for k in 0..h {
            x[(n + k, k)] = s;
        }
    }

    let rank_deficient = |rank| RetargetError::RankDeficient {
        samples: n,
        human_dof: h,
        rank,
    };
    if x.nrows() < h {
        return Err(rank_deficient(x.nrows()));
    }
    let svd = linalg::svd(&x);
    let sigma_max = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_RTOL * sigma_max && s > 0.0)
        .count();
    if rank < h {
        return Err(rank_deficient(rank));
    }
    let (u, v_t) = (&svd.u, &svd.v_t);
    // W^T = V diag(1/s) U^T Y
    let mut uty = u.transpose() * &y;
    for (k, s) in svd.singular_values.iter().enumerate() {
        uty.row_mut(k).scale_mut(1.0 / s);
    }
    let wt = v_t.transpose() * uty;
    let gains = wt.transpose();

    let mut predicted = Vec::with_capacity(n);
    let mut sample_residuals = Vec::with_capacity(n);
    for s in &cal.samples {
        let p = &gains * DVector::from_column_slice(&s.human);
        let diff = &p - DVector::from_column_slice(&s.robot);
        sample_residuals.push((diff.norm_squared() / r as f64).sqrt());
        predicted.push(p.as_slice().to_vec());
    }
    let truth: Vec<&[f64]> = cal.samples.iter().map(|s| s.robot.as_slice()).collect();
    let error = mapping_error(&predicted, &truth)?;
    Ok(MappingFit {
        gains,
        sample_residuals,
        error,
    })
}

/// Joint-angle prediction error: the root of the mean squared difference
/// over every scalar angle in `pred` and `truth`.
pub fn mapping_error<P, T>(pred: &[P], truth: &[T]) -> Result<f64, RetargetError>
where
    P: AsRef<[f64]>,
    T: AsRef<[f64]>,
{
    if pred.len() != truth.len() {
        return Err(RetargetError::DimensionMismatch(format!(
            "{} predictions, {} ground-truth samples",
            pred.len(),
            truth.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, (p, t)) in pred.iter().zip(truth).enumerate() {
        let (p, t) = (p.as_ref(), t.as_ref());
        if p.len() != t.len() {
            return Err(RetargetError::DimensionMismatch(format!(
                "sample {i}: {} vs {} angles",
                p.len(),
                t.len()
            )));
        }
        sum += p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        count += p.len();
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok((sum / count as f64).sqrt())
}
