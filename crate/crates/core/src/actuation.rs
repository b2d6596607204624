//! Joint space to actuator space through a coupling matrix `J`
//! (`theta = J u`) and its Moore-Penrose pseudoinverse (`u = J+ theta`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::retarget::RobotHandAngles;

/// Singular values below `PINV_RCOND * sigma_max` are treated as zero.
pub const PINV_RCOND: f64 = 1e-10;
/// Infinity-norm gap `||J u - theta||` above which a pose is reported as
/// inconsistent with the coupling.
pub const COUPLING_GAP_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActuationError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid coupling matrix: {0}")]
    InvalidCoupling(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    /// `sigma_min / sigma_max` over all singular values (0 when rank-deficient).
    pub reciprocal_condition: f64,
}

impl PseudoInverse {
    /// Set when `sigma_min / sigma_max < PINV_RCOND`.
    pub fn ill_conditioned(&self) -> bool {
        self.reciprocal_condition < PINV_RCOND
    }
}

/// Moore-Penrose pseudoinverse via SVD with relative cutoff [`PINV_RCOND`].
///
/// When `J^T J` is invertible this equals `(J^T J)^-1 J^T`.
pub fn pseudoinverse(j: &DMatrix<f64>) -> PseudoInverse {
    let (rows, cols) = j.shape();
    if rows == 0 || cols == 0 {
        return PseudoInverse {
            matrix: DMatrix::zeros(cols, rows),
            rank: 0,
            reciprocal_condition: 0.0,
        };
    }
    let svd = linalg::svd(j);
    let (u, v_t, s) = (&svd.u, &svd.v_t, &svd.singular_values);
    let s_max = s.max();
    let s_min = s.min();
    let cutoff = PINV_RCOND * s_max;

    let mut pinv = DMatrix::zeros(cols, rows);
    let mut rank = 0;
    for (k, &sk) in s.iter().enumerate() {
        if sk > cutoff && sk > 0.0 {
            rank += 1;
            // rank-one update v_k u_k^T / s_k
            pinv.ger(1.0 / sk, &v_t.row(k).transpose(), &u.column(k), 1.0);
        }
    }
    PseudoInverse {
        matrix: pinv,
        rank,
        reciprocal_condition: if s_max > 0.0 { s_min / s_max } else { 0.0 },
    }
}

/// Closed form `(J^T J)^-1 J^T`; `None` when `J^T J` is not positive definite.
pub fn pseudoinverse_normal_equations(j: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let jt = j.transpose();
    let chol = (&jt * j).cholesky()?;
    Some(chol.solve(&jt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorLimit {
    pub lower: f64,
    pub upper: f64,
}

/// Joint-from-actuator coupling `J` (joints x actuators) with its cached
/// pseudoinverse.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    j: DMatrix<f64>,
    names: Vec<String>,
    limits: Vec<Option<ActuatorLimit>>,
    pinv: PseudoInverse,
}

impl CouplingMatrix {
    pub fn new(
        j: DMatrix<f64>,
        names: Vec<String>,
        limits: Vec<Option<ActuatorLimit>>,
    ) -> Result<Self, ActuationError> {
        let (rows, cols) = j.shape();
        let invalid = |m: String| Err(ActuationError::InvalidCoupling(m));
        if rows == 0 || cols == 0 {
            return invalid("empty coupling matrix".into());
        }
        if cols > rows {
            return invalid(format!("{cols} actuators exceed {rows} joints"));
        }
        if names.len() != cols || limits.len() != cols {
            return invalid(format!(
                "{} names / {} limits for {cols} actuators",
                names.len(),
                limits.len()
            ));
        }
        if j.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite gain".into());
        }
        for c in 0..cols {
            if j.column(c).iter().all(|&v| v == 0.0) {
                return invalid(format!("actuator '{}' drives no joint", names[c]));
            }
        }
        for (name, l) in names.iter().zip(&limits) {
            if let Some(l) = l {
                if !(l.lower <= l.upper) {
                    return invalid(format!("actuator '{name}' has lower > upper"));
                }
            }
        }
        let pinv = pseudoinverse(&j);
        Ok(CouplingMatrix {
            j,
            names,
            limits,
            pinv,
        })
    }

    /// One actuator per joint with unit gain.
    pub fn identity(joints: usize) -> Result<Self, ActuationError> {
        Self::new(
            DMatrix::identity(joints, joints),
            (0..joints).map(|i| format!("a{i}")).collect(),
            vec![None; joints],
        )
    }

    /// Builds `J` from sparse `(joint, actuator, gain)` triples. Repeated
    /// pairs accumulate.
    pub fn from_triples(
        joints: usize,
        names: Vec<String>,
        limits: Vec<Option<ActuatorLimit>>,
        triples: &[(usize, usize, f64)],
    ) -> Result<Self, ActuationError> {
        let mut j = DMatrix::zeros(joints, names.len());
        for &(r, c, g) in triples {
            if r >= joints || c >= names.len() {
                return Err(ActuationError::InvalidCoupling(format!(
                    "triple ({r}, {c}) outside {joints}x{}",
                    names.len()
                )));
            }
            j[(r, c)] += g;
        }
        Self::new(j, names, limits)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn pinv(&self) -> &PseudoInverse {
        &self.pinv
    }

    pub fn joints(&self) -> usize {
        self.j.nrows()
    }

    pub fn actuators(&self) -> usize {
        self.j.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn limits(&self) -> &[Option<ActuatorLimit>] {
        &self.limits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    /// Commands after limit clamping.
    pub u: Vec<f64>,
    pub saturated: Vec<bool>,
    /// `||J u - theta||_2` before clamping.
    pub residual: f64,
    /// `||J u - theta||_inf` before clamping.
    pub residual_inf: f64,
    /// `residual_inf > COUPLING_GAP_TOL`.
    pub inconsistent: bool,
}

pub fn joints_to_actuators(
    theta: &RobotHandAngles,
    j: &CouplingMatrix,
) -> Result<ActuatorCommand, ActuationError> {
    if theta.len() != j.joints() {
        return Err(ActuationError::DimensionMismatch(format!(
            "{} joint angles for a {}-joint coupling",
            theta.len(),
            j.joints()
        )));
    }
    let t = theta.to_dvector();
    let u = &j.pinv.matrix * &t;
    let gap = &j.j * &u - &t;
    let residual_inf = gap.amax();
    let mut saturated = vec![false; u.len()];
    let clamped = u
        .iter()
        .zip(&j.limits)
        .zip(saturated.iter_mut())
        .map(|((&v, lim), sat)| match lim {
            Some(l) => {
                let c = v.clamp(l.lower, l.upper);
                *sat = c != v;
                c
            }
            None => v,
        })
        .collect();
    Ok(ActuatorCommand {
        u: clamped,
        saturated,
        residual: gap.norm(),
        residual_inf,
        inconsistent: residual_inf > COUPLING_GAP_TOL,
    })
}

/// Forward coupling `theta = J u`.
pub fn actuators_to_joints(u: &[f64], j: &CouplingMatrix) -> Result<RobotHandAngles, ActuationError> {
    if u.len() != j.actuators() {
        return Err(ActuationError::DimensionMismatch(format!(
            "{} commands for {} actuators",
            u.len(),
            j.actuators()
        )));
    }
    let theta = &j.j * DVector::from_column_slice(u);
    Ok(RobotHandAngles(theta.as_slice().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_12() -> CouplingMatrix {
        CouplingMatrix::new(
            DMatrix::from_column_slice(2, 1, &[1.0, 2.0]),
            vec!["a".into()],
            vec![None],
        )
        .unwrap()
    }

    #[test]
    fn identity_pinv() {
        let p = pseudoinverse(&DMatrix::identity(6, 6));
        assert!((p.matrix - DMatrix::<f64>::identity(6, 6)).amax() < 1e-15);
        assert_eq!(p.rank, 6);
    }

    #[test]
    fn column_pinv() {
        let p = pseudoinverse(column_12().matrix());
        assert_eq!(p.matrix.shape(), (1, 2));
        assert!((p.matrix[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((p.matrix[(0, 1)] - 0.4).abs() < 1e-15);
        let closed = pseudoinverse_normal_equations(column_12().matrix()).unwrap();
        assert!((closed - p.matrix).amax() < 1e-15);
    }

    #[test]
    fn rank_deficient_flags_conditioning() {
        let j = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let p = pseudoinverse(&j);
        assert_eq!(p.rank, 1);
        assert!(p.ill_conditioned());
        assert!(pseudoinverse_normal_equations(&j).is_none());
        // J J+ J = J still holds
        assert!((&j * &p.matrix * &j - &j).amax() < 1e-12);
    }

    #[test]
    fn zero_theta() {
        let c = joints_to_actuators(&RobotHandAngles(vec![0.0, 0.0]), &column_12()).unwrap();
        assert_eq!(c.u, vec![0.0]);
        assert_eq!(c.residual, 0.0);
        assert!(!c.inconsistent);
    }

    #[test]
    fn in_column_space() {
        let c = joints_to_actuators(&RobotHandAngles(vec![0.2, 0.4]), &column_12()).unwrap();
        assert!((c.u[0] - 0.2).abs() < 1e-15);
        assert!(c.residual < 1e-15);
        assert!(!c.inconsistent);
    }

    #[test]
    fn outside_column_space() {
        let theta = [1.0, 0.0];
        let c = joints_to_actuators(&RobotHandAngles(theta.to_vec()), &column_12()).unwrap();
        assert!((c.u[0] - 0.2).abs() < 1e-15);
        assert!(c.inconsistent);
        // scalar grid oracle for argmin ||J u - theta||
        let cost = |u: f64| (u - theta[0]).powi(2) + (2.0 * u - theta[1]).powi(2);
        let best = (0..=10_000)
            .map(|k| -1.0 + k as f64 * 2e-4)
            .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
            .unwrap();
        assert!((best - c.u[0]).abs() < 2e-4);
        assert!((c.residual - cost(c.u[0]).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn forward_model() {
        let t = actuators_to_joints(&[0.0], &column_12()).unwrap();
        assert_eq!(t.0, vec![0.0, 0.0]);
        let t = actuators_to_joints(&[0.5], &column_12()).unwrap();
        assert_eq!(t.0, vec![0.5, 1.0]);
        assert!(actuators_to_joints(&[0.5, 1.0], &column_12()).is_err());
    }

    #[test]
    fn round_trip_projects() {
        let c = column_12();
        for theta in [[0.3, 0.6], [1.0, 0.0], [-0.4, 0.9]] {
            let t = RobotHandAngles(theta.to_vec());
            let u = joints_to_actuators(&t, &c).unwrap();
            let back = actuators_to_joints(&u.u, &c).unwrap();
            let proj = c.matrix() * &c.pinv().matrix * t.to_dvector();
            for (a, b) in back.0.iter().zip(proj.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn limits_clamp_with_flags() {
        let c = CouplingMatrix::new(
            DMatrix::identity(2, 2),
            vec!["a".into(), "b".into()],
            vec![Some(ActuatorLimit { lower: 0.0, upper: 0.5 }), None],
        )
        .unwrap();
        let cmd = joints_to_actuators(&RobotHandAngles(vec![0.9, 0.9]), &c).unwrap();
        assert_eq!(cmd.u, vec![0.5, 0.9]);
        assert_eq!(cmd.saturated, vec![true, false]);
    }

    #[test]
    fn coupling_validation() {
        let no_drive = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(CouplingMatrix::new(no_drive, vec!["a".into(), "b".into()], vec![None; 2]).is_err());
        let wide = DMatrix::from_element(1, 2, 1.0);
        assert!(CouplingMatrix::new(wide, vec!["a".into(), "b".into()], vec![None; 2]).is_err());
        assert!(CouplingMatrix::from_triples(2, vec!["a".into()], vec![None], &[(2, 0, 1.0)]).is_err());
        assert!(joints_to_actuators(&RobotHandAngles(vec![0.0]), &column_12()).is_err());
    }
}
