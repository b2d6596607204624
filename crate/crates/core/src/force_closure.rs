//! Geometric force-closure test.
//!
//! Each point contact's friction cone is replaced by `m` edge directions; every
//! edge gives a wrench column `[w; p x w]`. The grasp is force closure when the
//! origin of wrench space lies strictly inside the convex hull of those
//! columns. Interiority and its certificate come from a phase-1 style LP; the
//! interior margin (inscribed-ball radius) comes from a sequence of
//! ray-shooting LPs whose dual multipliers are supporting hyperplanes.

use nalgebra::{DMatrix, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, LpOutcome};

pub const DEFAULT_EDGES: usize = 6;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosureError {
    #[error("negative friction coefficient {0}")]
    NegativeFriction(f64),
    #[error("contact has no friction coefficient and no default was given")]
    MissingFriction,
    #[error("contact normal must be non-zero and finite")]
    InvalidNormal,
    #[error("contact position must be finite")]
    InvalidPoint,
    #[error("empty contact set")]
    EmptyContactSet,
    #[error("edge count {edges} too small (need >= {min})")]
    InvalidEdgeCount { edges: usize, min: usize },
    #[error("characteristic length must be positive and finite, got {0}")]
    InvalidLength(f64),
}

/// Point contact with Coulomb friction. The stored normal is unit length and
/// points into the object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub p: Vector3<f64>,
    pub n: Vector3<f64>,
    pub mu: f64,
}

impl Contact {
    /// Normalizes `n`.
    pub fn new(p: Vector3<f64>, n: Vector3<f64>, mu: f64) -> Result<Self, ClosureError> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(ClosureError::NegativeFriction(mu));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(ClosureError::InvalidPoint);
        }
        let norm = n.norm();
        if !(norm > 1e-12) || !norm.is_finite() {
            return Err(ClosureError::InvalidNormal);
        }
        Ok(Contact { p, n: n / norm, mu })
    }
}

pub fn cone_half_angle(mu: f64) -> Result<f64, ClosureError> {
    if !(mu >= 0.0) {
        return Err(ClosureError::NegativeFriction(mu));
    }
    Ok(mu.atan())
}

/// Orthonormal `(t1, t2)` with `{t1, t2, n}` right-handed.
///
/// The reference axis is the world axis least aligned with `n` (ties go to
/// x, then y, then z); `t1 = n x r / |n x r|`, `t2 = n x t1`.
pub fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let mut r = axes[0];
    let mut best = n.x.abs();
    for (axis, c) in axes.iter().zip([n.x, n.y, n.z]).skip(1) {
        if c.abs() < best {
            best = c.abs();
            r = *axis;
        }
    }
    let t1 = n.cross(&r).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrictionCone {
    pub half_angle: f64,
    pub t1: Vector3<f64>,
    pub t2: Vector3<f64>,
    pub edges: Vec<Vector3<f64>>,
}

fn check_edges(mu: f64, m: usize) -> Result<(), ClosureError> {
    let min = if mu > 0.0 { 3 } else { 1 };
    if m < min {
        return Err(ClosureError::InvalidEdgeCount { edges: m, min });
    }
    Ok(())
}

/// `w_j = cos(a) n + sin(a) (cos(phi_j) t1 + sin(phi_j) t2)` with
/// `phi_j = 2 pi j / m`, `a = atan(mu)`.
pub fn cone_edges(c: &Contact, m: usize) -> Result<FrictionCone, ClosureError> {
    check_edges(c.mu, m)?;
    let half_angle = cone_half_angle(c.mu)?;
    let (t1, t2) = tangent_basis(&c.n);
    let (s, co) = half_angle.sin_cos();
    let edges = (0..m)
        .map(|j| {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let w = c.n * co + (t1 * phi.cos() + t2 * phi.sin()) * s;
            // renormalize away the last ulp or two
            w / w.norm()
        })
        .collect();
    Ok(FrictionCone {
        half_angle,
        t1,
        t2,
        edges,
    })
}

/// The `6 x (m n)` grasp matrix; column `i * m + j` is contact `i`, edge `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchMatrix {
    pub g: DMatrix<f64>,
    pub edges_per_contact: usize,
    pub contacts: usize,
}

impl WrenchMatrix {
    pub fn column_of(&self, contact: usize, edge: usize) -> usize {
        contact * self.edges_per_contact + edge
    }
}

pub fn grasp_matrix(contacts: &[Contact], m: usize) -> Result<WrenchMatrix, ClosureError> {
    grasp_matrix_scaled(contacts, m, 1.0)
}

/// As [`grasp_matrix`], with torque rows divided by the characteristic
/// length `rho`.
pub fn grasp_matrix_scaled(
    contacts: &[Contact],
    m: usize,
    rho: f64,
) -> Result<WrenchMatrix, ClosureError> {
    if contacts.is_empty() {
        return Err(ClosureError::EmptyContactSet);
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(ClosureError::InvalidLength(rho));
    }
    let mut g = DMatrix::zeros(6, contacts.len() * m);
    for (i, c) in contacts.iter().enumerate() {
        let cone = cone_edges(c, m)?;
        for (j, w) in cone.edges.iter().enumerate() {
            let torque = c.p.cross(w) / rho;
            let col = Vector6::new(w.x, w.y, w.z, torque.x, torque.y, torque.z);
            g.set_column(i * m + j, &col);
        }
    }
    Ok(WrenchMatrix {
        g,
        edges_per_contact: m,
        contacts: contacts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureVerdict {
    pub closed: bool,
    /// Inscribed-ball radius of the wrench hull about the origin, divided by
    /// the largest column norm; 0 when not closed.
    pub margin: f64,
    pub rank: usize,
    /// Convex weights with `G lambda = 0`, present when closed.
    pub certificate: Option<Vec<f64>>,
}

pub fn matrix_rank(g: &DMatrix<f64>) -> usize {
    if g.is_empty() {
        return 0;
    }
    let s = g.singular_values();
    let smax = s.max();
    if smax <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > RANK_RTOL * smax).count()
}

/// Strictly-positive convex combination test:
/// `max s  s.t.  G lambda = 0, sum lambda = 1, lambda_j >= s`.
/// Returns `(s*, lambda)` or `None` when the origin is outside the hull.
fn interior_weights(g: &DMatrix<f64>) -> Option<(f64, Vec<f64>)> {
    let k = g.ncols();
    let row_sums: Vec<f64> = (0..6).map(|r| g.row(r).sum()).collect();
    // variables: mu_1..mu_k, s  (lambda_j = mu_j + s)
    let mut a = Vec::with_capacity(7);
    for r in 0..6 {
        let mut row: Vec<f64> = g.row(r).iter().copied().collect();
        row.push(row_sums[r]);
        a.push(row);
    }
    let mut sum_row = vec![1.0; k];
    sum_row.push(k as f64);
    a.push(sum_row);
    let mut b = vec![0.0; 6];
    b.push(1.0);
    let mut c = vec![0.0; k];
    c.push(1.0);
    match LinearProgram::new(a, b, c).solve() {
        LpOutcome::Optimal(sol) => {
            let s = sol.x[k];
            let lambda = sol.x[..k].iter().map(|m| m + s).collect();
            Some((s, lambda))
        }
        _ => None,
    }
}

/// Supporting hyperplane hit by the ray `t d` (origin assumed interior).
/// Returns `(exit distance, hyperplane distance, unit hyperplane normal)`.
fn shoot_ray(g: &DMatrix<f64>, d: &Vector6<f64>) -> Option<(f64, f64, Vector6<f64>)> {
    let k = g.ncols();
    // max t  s.t. G lambda - t d = 0, sum lambda = 1
    let mut a = Vec::with_capacity(7);
    for r in 0..6 {
        let mut row: Vec<f64> = g.row(r).iter().copied().collect();
        row.push(-d[r]);
        a.push(row);
    }
    let mut sum_row = vec![1.0; k];
    sum_row.push(0.0);
    a.push(sum_row);
    let mut b = vec![0.0; 6];
    b.push(1.0);
    let mut c = vec![0.0; k];
    c.push(1.0);
    let LpOutcome::Optimal(sol) = LinearProgram::new(a, b, c).solve() else {
        return None;
    };
    let t = sol.x[k];
    // dual (y, y0): valid inequality (-y).x <= y0 = t for every column
    let y = Vector6::from_iterator(sol.duals[..6].iter().copied());
    let ny = y.norm();
    if !(t > 0.0) || !(ny > 0.0) {
        return None;
    }
    let normal = -y / ny;
    // tighten to the actual support value along the normal
    let support = (0..k)
        .map(|j| g.column(j).dot(&normal))
        .fold(f64::NEG_INFINITY, f64::max);
    Some((t, support, normal))
}

/// Radius of the largest origin-centred ball inside `conv(columns)`.
///
/// Each ray LP yields a supporting hyperplane whose distance bounds the radius
/// from above; re-shooting along that hyperplane's normal never increases the
/// bound. The walk is restarted from the coordinate axes and every negated
/// column, and the smallest bound found is returned.
fn interior_radius(g: &DMatrix<f64>) -> f64 {
    let mut starts: Vec<Vector6<f64>> = Vec::new();
    for i in 0..6 {
        let mut e = Vector6::zeros();
        e[i] = 1.0;
        starts.push(e);
        starts.push(-e);
    }
    for j in 0..g.ncols() {
        let col: Vector6<f64> = g.fixed_view::<6, 1>(0, j).into_owned();
        let n = col.norm();
        if n > 0.0 {
            starts.push(-col / n);
        }
    }
    let mut best = f64::INFINITY;
    for start in starts {
        let mut d = start;
        let mut current = f64::INFINITY;
        for _ in 0..64 {
            let Some((_, dist, normal)) = shoot_ray(g, &d) else {
                break;
            };
            best = best.min(dist);
            if dist >= current * (1.0 - 1e-12) {
                break;
            }
            current = dist;
            d = normal;
        }
    }
    if best.is_finite() {
        best.max(0.0)
    } else {
        0.0
    }
}

/// Decides force closure: `rank(G) = 6` and the origin is strictly interior to
/// the hull of the columns with normalized margin above `tol`.
pub fn check_force_closure(w: &WrenchMatrix, tol: f64) -> ClosureVerdict {
    let g = &w.g;
    let rank = matrix_rank(g);
    let not_closed = ClosureVerdict {
        closed: false,
        margin: 0.0,
        rank,
        certificate: None,
    };
    if rank < 6 {
        return not_closed;
    }
    let scale = (0..g.ncols())
        .map(|j| g.column(j).norm())
        .fold(0.0_f64, f64::max);
    let gn = g / scale;
    let Some((s, lambda)) = interior_weights(&gn) else {
        return not_closed;
    };
    if !(s > 1e-12) {
        return not_closed;
    }
    let margin = interior_radius(&gn);
    if margin > tol {
        ClosureVerdict {
            closed: true,
            margin,
            rank,
            certificate: Some(lambda),
        }
    } else {
        not_closed
    }
}

/// Convenience wrapper: build the grasp matrix and check it.
pub fn contacts_force_closure(
    contacts: &[Contact],
    m: usize,
    tol: f64,
) -> Result<ClosureVerdict, ClosureError> {
    Ok(check_force_closure(&grasp_matrix(contacts, m)?, tol))
}

/// Four contacts at the vertices of a regular tetrahedron inscribed in the
/// unit sphere, normals pointing at the center.
pub fn tetrahedron_contacts(mu: f64) -> Vec<Contact> {
    let s = 1.0 / 3.0_f64.sqrt();
    [
        Vector3::new(s, s, s),
        Vector3::new(s, -s, -s),
        Vector3::new(-s, s, -s),
        Vector3::new(-s, -s, s),
    ]
    .into_iter()
    .map(|p| Contact::new(p, -p, mu).expect("valid fixture"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn half_angle_examples() {
        assert_eq!(cone_half_angle(0.0).unwrap(), 0.0);
        assert!((cone_half_angle(1.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!((cone_half_angle(0.5).unwrap() - 0.463_647_609_000_806_1).abs() < 1e-15);
        assert_eq!(cone_half_angle(-0.1), Err(ClosureError::NegativeFriction(-0.1)));
    }

    #[test]
    fn tangent_basis_z() {
        let n = Vector3::z();
        let (t1, t2) = tangent_basis(&n);
        // r = x: t1 = z cross x = y, t2 = z cross y = -x
        assert!((t1 - Vector3::y()).norm() < 1e-15);
        assert!((t2 + Vector3::x()).norm() < 1e-15);
        assert!((t1.cross(&t2) - n).norm() < 1e-15);
    }

    #[test]
    fn tangent_basis_continuity() {
        let a = tangent_basis(&Vector3::x());
        let b = tangent_basis(&Vector3::new(1.0, 0.0, 1e-9).normalize());
        assert!((a.0 - b.0).norm() < 1e-6);
        assert!((a.1 - b.1).norm() < 1e-6);
    }

    #[test]
    fn frictionless_edges_collapse() {
        let c = Contact::new(Vector3::zeros(), Vector3::new(0.0, 1.0, 1.0), 0.0).unwrap();
        let cone = cone_edges(&c, 6).unwrap();
        for e in &cone.edges {
            assert!((e - c.n).norm() < 1e-15);
        }
    }

    #[test]
    fn unit_friction_edges() {
        let c = Contact::new(Vector3::zeros(), Vector3::z(), 1.0).unwrap();
        let cone = cone_edges(&c, 6).unwrap();
        let s = (PI / 4.0).sin();
        for (j, e) in cone.edges.iter().enumerate() {
            assert!((e.z - (PI / 4.0).cos()).abs() < 1e-12);
            let h = Vector3::new(e.x, e.y, 0.0);
            assert!((h.norm() - s).abs() < 1e-12);
            let next = cone.edges[(j + 1) % 6];
            let hn = Vector3::new(next.x, next.y, 0.0);
            let ang = (h.dot(&hn) / (h.norm() * hn.norm())).acos();
            assert!((ang - PI / 3.0).abs() < 1e-9);
        }
        let sum: Vector3<f64> = cone.edges.iter().sum();
        assert!((sum - c.n * 6.0 * (PI / 4.0).cos()).norm() < 1e-9);
    }

    #[test]
    fn edge_count_checked() {
        let c = Contact::new(Vector3::zeros(), Vector3::z(), 0.3).unwrap();
        assert!(cone_edges(&c, 2).is_err());
        let c0 = Contact::new(Vector3::zeros(), Vector3::z(), 0.0).unwrap();
        assert!(cone_edges(&c0, 1).is_ok());
    }

    #[test]
    fn grasp_matrix_examples() {
        let origin = Contact::new(Vector3::zeros(), Vector3::z(), 0.4).unwrap();
        let g = grasp_matrix(&[origin], 6).unwrap();
        assert_eq!(g.g.shape(), (6, 6));
        assert!(g.g.rows(3, 3).amax() == 0.0);

        let offset = Contact::new(Vector3::x(), Vector3::z(), 0.0).unwrap();
        let g = grasp_matrix(&[offset], 6).unwrap();
        let col = g.g.column(0);
        assert!((col[3] - 0.0).abs() < 1e-15);
        assert!((col[4] + 1.0).abs() < 1e-15);
        assert!((col[5] - 0.0).abs() < 1e-15);

        let g = grasp_matrix(&tetrahedron_contacts(0.5)[..3], 6).unwrap();
        assert_eq!(g.g.shape(), (6, 18));
        assert_eq!(grasp_matrix(&[], 6), Err(ClosureError::EmptyContactSet));
    }

    #[test]
    fn single_contact_not_closed() {
        for mu in [0.0, 0.5, 1.0, 3.0] {
            let c = Contact::new(Vector3::new(0.1, 0.2, 0.3), -Vector3::z(), mu).unwrap();
            let v = contacts_force_closure(&[c], 6, DEFAULT_TOL).unwrap();
            assert!(!v.closed);
            assert_eq!(v.margin, 0.0);
        }
    }

    #[test]
    fn antipodal_frictionless_not_closed() {
        let a = Contact::new(Vector3::x(), -Vector3::x(), 0.0).unwrap();
        let b = Contact::new(-Vector3::x(), Vector3::x(), 0.0).unwrap();
        let v = contacts_force_closure(&[a, b], 6, DEFAULT_TOL).unwrap();
        assert!(!v.closed);
        assert_eq!(v.rank, 1);
    }

    #[test]
    fn tetrahedron_closed_with_certificate() {
        let w = grasp_matrix(&tetrahedron_contacts(0.5), 6).unwrap();
        let v = check_force_closure(&w, DEFAULT_TOL);
        assert!(v.closed);
        assert_eq!(v.rank, 6);
        assert!(v.margin > 0.0);
        let lambda = v.certificate.unwrap();
        assert!(lambda.iter().all(|&l| l >= 0.0));
        assert!((lambda.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        let scale = (0..w.g.ncols()).map(|j| w.g.column(j).norm()).fold(0.0, f64::max);
        let residual = (&w.g / scale) * nalgebra::DVector::from_vec(lambda);
        assert!(residual.amax() < 1e-8);
    }

    #[test]
    fn frictionless_tetrahedron_not_closed() {
        // four frictionless contacts can never span six wrench dimensions
        let v = contacts_force_closure(&tetrahedron_contacts(0.0), 6, DEFAULT_TOL).unwrap();
        assert!(!v.closed);
        assert!(v.rank <= 4);
    }

    #[test]
    fn margin_matches_facet_bound_on_simplex() {
        // the hull of +-e_i in R^6 (cross-polytope) has inradius 1/sqrt(6)
        let mut g = DMatrix::zeros(6, 12);
        for i in 0..6 {
            g[(i, 2 * i)] = 1.0;
            g[(i, 2 * i + 1)] = -1.0;
        }
        let w = WrenchMatrix {
            g,
            edges_per_contact: 1,
            contacts: 12,
        };
        let v = check_force_closure(&w, DEFAULT_TOL);
        assert!(v.closed);
        assert!((v.margin - 1.0 / 6.0_f64.sqrt()).abs() < 1e-9, "{}", v.margin);
    }

    #[test]
    fn margin_of_shifted_box() {
        // +-e_i for i < 5 plus e_5 and -0.25 e_5: inradius bounded by the
        // facets touching -0.25 e_5
        let mut g = DMatrix::zeros(6, 12);
        for i in 0..6 {
            g[(i, 2 * i)] = 1.0;
            g[(i, 2 * i + 1)] = if i == 5 { -0.25 } else { -1.0 };
        }
        let w = WrenchMatrix {
            g,
            edges_per_contact: 1,
            contacts: 12,
        };
        let v = check_force_closure(&w, DEFAULT_TOL);
        // facet normal (1,1,1,1,1,4)/sqrt(21) at level 1 -> distance 1/sqrt(21)
        assert!(v.closed);
        assert!((v.margin - 1.0 / 21.0_f64.sqrt()).abs() < 1e-9, "{}", v.margin);
    }

    #[test]
    fn contact_validation() {
        assert!(Contact::new(Vector3::zeros(), Vector3::zeros(), 0.1).is_err());
        assert!(Contact::new(Vector3::zeros(), Vector3::z(), -1.0).is_err());
        assert!(Contact::new(Vector3::new(f64::NAN, 0.0, 0.0), Vector3::z(), 0.1).is_err());
        let c = Contact::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 2.0), 0.1).unwrap();
        assert_eq!(c.n, Vector3::z());
    }
}
