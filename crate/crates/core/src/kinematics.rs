//! Human-hand kinematics: keypoint deprojection, palm frame, and the
//! abduction / flexion angles that make up the 20-dimensional human joint
//! vector.
//!
//! Landmarks follow the common 21-point layout: `0` is the wrist, then four
//! landmarks per finger from thumb to little finger, each ordered base to tip.
//! The wrist is replaced by a palm center (midpoint of the wrist and the
//! middle-finger base) when forming the palm plane and the palm-to-base
//! vectors.

use std::fmt;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of landmarks in a keypoint frame.
pub const NUM_KEYPOINTS: usize = 21;
/// Dimension of the human joint-angle vector.
pub const HUMAN_DOF: usize = 20;

const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("non-positive depth {0}")]
    NonPositiveDepth(f64),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("expected {NUM_KEYPOINTS} keypoints, got {0}")]
    WrongKeypointCount(usize),
    #[error("keypoint {0} has a non-finite coordinate")]
    NonFiniteKeypoint(usize),
    #[error("invalid skeleton layout: {0}")]
    InvalidLayout(String),
    #[error("degenerate palm: ring base, index base and palm center are collinear")]
    DegeneratePalm,
    #[error("degenerate segment: zero-length joint vector")]
    DegenerateSegment,
    #[error("degenerate projection: joint vector is parallel to the palm normal")]
    DegenerateProjection,
    #[error("{finger} joint {joint}: {source}")]
    AtJoint {
        finger: Finger,
        joint: usize,
        #[source]
        source: Box<KinematicsError>,
    },
}

impl KinematicsError {
    fn at(self, finger: Finger, joint: usize) -> Self {
        KinematicsError::AtJoint {
            finger,
            joint,
            source: Box::new(self),
        }
    }

    /// The underlying error with any finger/joint annotation stripped.
    pub fn root(&self) -> &KinematicsError {
        match self {
            KinematicsError::AtJoint { source, .. } => source.root(),
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
}

impl Finger {
    pub const ALL: [Finger; 5] = [
        Finger::Thumb,
        Finger::Index,
        Finger::Middle,
        Finger::Ring,
        Finger::Little,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Finger::Thumb => "thumb",
            Finger::Index => "index",
            Finger::Middle => "middle",
            Finger::Ring => "ring",
            Finger::Little => "little",
        }
    }
}

impl fmt::Display for Finger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pinhole camera intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, KinematicsError> {
        let k = CameraIntrinsics { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(KinematicsError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(KinematicsError::InvalidIntrinsics(
                "principal point must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Projects a camera-frame point to `(u, v, depth)`.
    pub fn project(&self, p: &Point3<f64>) -> (f64, f64, f64) {
        (
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
            p.z,
        )
    }
}

/// Lifts a pixel with metric depth into the camera frame.
pub fn deproject(
    u: f64,
    v: f64,
    depth: f64,
    intrinsics: &CameraIntrinsics,
) -> Result<Point3<f64>, KinematicsError> {
    intrinsics.validate()?;
    if !(depth > 0.0) {
        return Err(KinematicsError::NonPositiveDepth(depth));
    }
    Ok(Point3::new(
        (u - intrinsics.cx) * depth / intrinsics.fx,
        (v - intrinsics.cy) * depth / intrinsics.fy,
        depth,
    ))
}

/// One timestamped set of 21 camera-frame keypoints (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointFrame {
    pub frame_index: u64,
    points: Vec<Point3<f64>>,
}

impl KeypointFrame {
    pub fn new(frame_index: u64, points: Vec<Point3<f64>>) -> Result<Self, KinematicsError> {
        if points.len() != NUM_KEYPOINTS {
            return Err(KinematicsError::WrongKeypointCount(points.len()));
        }
        if let Some(i) = points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(KinematicsError::NonFiniteKeypoint(i));
        }
        Ok(KeypointFrame {
            frame_index,
            points,
        })
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point3<f64> {
        &self.points[i]
    }

    /// Applies `f` to every keypoint. Used for rigid-motion checks.
    pub fn map_points(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> Self {
        KeypointFrame {
            frame_index: self.frame_index,
            points: self.points.iter().map(f).collect(),
        }
    }
}

/// Which landmarks feed the palm plane and each finger chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandSkeletonLayout {
    pub wrist: usize,
    /// Landmark paired with the wrist to form the palm center.
    pub palm_partner: usize,
    pub ring_base: usize,
    pub index_base: usize,
    /// Per finger (thumb..little), landmark indices ordered base to tip.
    pub chains: [Vec<usize>; 5],
}

impl Default for HandSkeletonLayout {
    fn default() -> Self {
        HandSkeletonLayout {
            wrist: 0,
            palm_partner: 9,
            ring_base: 13,
            index_base: 5,
            chains: [
                vec![1, 2, 3, 4],
                vec![5, 6, 7, 8],
                vec![9, 10, 11, 12],
                vec![13, 14, 15, 16],
                vec![17, 18, 19, 20],
            ],
        }
    }
}

impl HandSkeletonLayout {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |msg: String| Err(KinematicsError::InvalidLayout(msg));
        let mut seen = [false; NUM_KEYPOINTS];
        let mut total = 0;
        for (finger, chain) in Finger::ALL.iter().zip(&self.chains) {
            if chain.len() < 3 {
                return bad(format!("{finger} chain has {} landmarks, need >= 3", chain.len()));
            }
            for &i in chain {
                if i >= NUM_KEYPOINTS {
                    return bad(format!("landmark {i} out of range"));
                }
                if seen[i] {
                    return bad(format!("landmark {i} used twice"));
                }
                seen[i] = true;
            }
            total += chain.len();
        }
        if total != HUMAN_DOF {
            return bad(format!("chains yield {total} angles, need {HUMAN_DOF}"));
        }
        for (name, i) in [("wrist", self.wrist), ("palm partner", self.palm_partner)] {
            if i >= NUM_KEYPOINTS {
                return bad(format!("{name} landmark {i} out of range"));
            }
        }
        if self.wrist == self.palm_partner {
            return bad("wrist and palm partner coincide".into());
        }
        if seen[self.wrist] {
            return bad("wrist landmark is part of a finger chain".into());
        }
        for (name, i) in [("ring base", self.ring_base), ("index base", self.index_base)] {
            if i >= NUM_KEYPOINTS {
                return bad(format!("{name} landmark {i} out of range"));
            }
        }
        if self.ring_base == self.index_base {
            return bad("ring base and index base coincide".into());
        }
        Ok(())
    }

    /// Angles contributed by each finger (1 abduction + chain flexions).
    pub fn finger_dims(&self) -> [usize; 5] {
        std::array::from_fn(|i| self.chains[i].len())
    }

    pub fn palm_center(&self, frame: &KeypointFrame) -> Point3<f64> {
        nalgebra::center(frame.point(self.wrist), frame.point(self.palm_partner))
    }
}

/// Unit palm normal anchored at the palm center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmFrame {
    pub normal: Vector3<f64>,
    pub anchor: Point3<f64>,
}

/// Unit normal of the plane through the palm center, ring base and index base,
/// oriented as `(ring - palm) x (index - palm)`.
pub fn palm_normal_from_points(
    palm: &Point3<f64>,
    ring: &Point3<f64>,
    index: &Point3<f64>,
) -> Result<PalmFrame, KinematicsError> {
    let a = ring - palm;
    let b = index - palm;
    let n = a.cross(&b);
    // Scale-relative test so the verdict does not depend on units.
    let scale = a.norm() * b.norm();
    let norm = n.norm();
    if norm < DEGENERATE_NORM || norm <= DEGENERATE_NORM * scale {
        return Err(KinematicsError::DegeneratePalm);
    }
    Ok(PalmFrame {
        normal: n / norm,
        anchor: *palm,
    })
}

pub fn palm_normal(
    frame: &KeypointFrame,
    layout: &HandSkeletonLayout,
) -> Result<PalmFrame, KinematicsError> {
    let palm = layout.palm_center(frame);
    palm_normal_from_points(
        &palm,
        frame.point(layout.ring_base),
        frame.point(layout.index_base),
    )
}

fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

/// Angle between consecutive joint vectors, in `[0, pi]`.
pub fn flexion_angle(q_n: &Vector3<f64>, q_next: &Vector3<f64>) -> Result<f64, KinematicsError> {
    if q_n.norm() <= DEGENERATE_NORM || q_next.norm() <= DEGENERATE_NORM {
        return Err(KinematicsError::DegenerateSegment);
    }
    Ok(angle_between(q_n, q_next))
}

/// Angle between the palm-to-base vector and the in-palm-plane projection of
/// the first finger segment, in `[0, pi]`.
pub fn abduction_angle(
    q_base: &Vector3<f64>,
    q_mcp: &Vector3<f64>,
    palm: &PalmFrame,
) -> Result<f64, KinematicsError> {
    if q_base.norm() <= DEGENERATE_NORM || q_mcp.norm() <= DEGENERATE_NORM {
        return Err(KinematicsError::DegenerateSegment);
    }
    let n = &palm.normal;
    let projected = q_mcp - n * q_mcp.dot(n);
    if projected.norm() <= DEGENERATE_NORM * q_mcp.norm().max(1.0) {
        return Err(KinematicsError::DegenerateProjection);
    }
    Ok(angle_between(q_base, &projected))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerAngles {
    pub abduction: f64,
    /// Base to tip.
    pub flexion: Vec<f64>,
}

impl FingerAngles {
    pub fn dof(&self) -> usize {
        1 + self.flexion.len()
    }
}

/// The human joint-angle vector, grouped per finger (thumb..little).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanHandAngles {
    pub fingers: [FingerAngles; 5],
}

impl HumanHandAngles {
    pub fn finger(&self, f: Finger) -> &FingerAngles {
        &self.fingers[f.index()]
    }

    pub fn finger_dims(&self) -> [usize; 5] {
        std::array::from_fn(|i| self.fingers[i].dof())
    }

    /// Flattened per finger as `[abduction, flexion...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(HUMAN_DOF);
        for f in &self.fingers {
            out.push(f.abduction);
            out.extend_from_slice(&f.flexion);
        }
        out
    }

    /// Inverse of [`to_vec`](Self::to_vec) for the given per-finger sizes.
    pub fn from_slice(values: &[f64], dims: [usize; 5]) -> Option<Self> {
        if dims.iter().any(|&d| d == 0) || dims.iter().sum::<usize>() != values.len() {
            return None;
        }
        let mut offset = 0;
        let fingers = dims.map(|d| {
            let block = &values[offset..offset + d];
            offset += d;
            FingerAngles {
                abduction: block[0],
                flexion: block[1..].to_vec(),
            }
        });
        Some(HumanHandAngles { fingers })
    }
}

/// Computes all human joint angles for one frame.
///
/// For finger `i` with chain landmarks `b0..bk`, the joint vectors are
/// `q0 = b0 - palm` and `q_n = b_n - b_{n-1}`. Abduction compares `q0` with
/// the palm-plane projection of `q1`; flexion `n` is the angle between
/// `q_n` and `q_{n+1}`.
pub fn extract_angles(
    frame: &KeypointFrame,
    layout: &HandSkeletonLayout,
) -> Result<HumanHandAngles, KinematicsError> {
    layout.validate()?;
    let palm = palm_normal(frame, layout)?;
    let fingers = try_array(|i| {
        let finger = Finger::ALL[i];
        let chain = &layout.chains[i];
        let mut vectors = Vec::with_capacity(chain.len());
        let mut prev = palm.anchor;
        for &landmark in chain {
            let p = *frame.point(landmark);
            vectors.push(p - prev);
            prev = p;
        }
        for (joint, v) in vectors.iter().enumerate() {
            if v.norm() <= DEGENERATE_NORM {
                return Err(KinematicsError::DegenerateSegment.at(finger, joint));
            }
        }
        let abduction =
            abduction_angle(&vectors[0], &vectors[1], &palm).map_err(|e| e.at(finger, 0))?;
        let flexion = vectors
            .windows(2)
            .enumerate()
            .map(|(joint, w)| flexion_angle(&w[0], &w[1]).map_err(|e| e.at(finger, joint + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FingerAngles { abduction, flexion })
    })?;
    Ok(HumanHandAngles { fingers })
}

fn try_array<T, E>(mut f: impl FnMut(usize) -> Result<T, E>) -> Result<[T; 5], E> {
    let v = (0..5).map(&mut f).collect::<Result<Vec<T>, E>>()?;
    Ok(v.try_into().unwrap_or_else(|_| unreachable!()))
}
