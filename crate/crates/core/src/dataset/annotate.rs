//! Keypoint stream to grasp records: angles, retargeting, actuation and an
//! optional force-closure check per frame.

use std::collections::HashMap;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion};

use super::{ClosureSummary, GraspRecord};
use crate::actuation::ActuatorCommand;
use crate::force_closure::{contacts_force_closure, Contact, DEFAULT_EDGES, DEFAULT_TOL};
use crate::io::{KeypointStream, RawFrame};
use crate::kinematics::{
    extract_angles, palm_normal, CameraIntrinsics, HandSkeletonLayout, KeypointFrame,
    KinematicsError,
};
use crate::profile::HandProfile;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectMeta {
    pub object_id: String,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotateOptions {
    pub layout: HandSkeletonLayout,
    pub edges: usize,
    pub tol: f64,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        AnnotateOptions {
            layout: HandSkeletonLayout::default(),
            edges: DEFAULT_EDGES,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedFrame {
    pub record: GraspRecord,
    /// Robot joints clamped to their limits.
    pub saturated_joints: Vec<usize>,
    pub actuators: ActuatorCommand,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFrame {
    pub frame_index: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Annotation {
    pub frames: Vec<AnnotatedFrame>,
    pub skipped: Vec<SkippedFrame>,
}

impl Annotation {
    pub fn records(&self) -> impl Iterator<Item = &GraspRecord> {
        self.frames.iter().map(|f| &f.record)
    }
}

/// Hand pose in the camera frame: origin at the palm center, z along the palm
/// normal, x towards the middle-finger base (projected into the palm plane).
/// Returns `([w, x, y, z], translation)` with `w >= 0`.
pub fn palm_pose(
    frame: &KeypointFrame,
    layout: &HandSkeletonLayout,
) -> Result<([f64; 4], [f64; 3]), KinematicsError> {
    let palm = palm_normal(frame, layout)?;
    let z = palm.normal;
    let toward = frame.point(layout.palm_partner) - palm.anchor;
    let in_plane = toward - z * toward.dot(&z);
    let norm = in_plane.norm();
    if !(norm > 1e-12) {
        return Err(KinematicsError::DegenerateProjection);
    }
    let x = in_plane / norm;
    let y = z.cross(&x);
    let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
    let q = UnitQuaternion::from_rotation_matrix(&rot);
    let mut wxyz = [q.w, q.i, q.j, q.k];
    if wxyz[0] < 0.0 {
        wxyz = wxyz.map(|c| -c);
    }
    let t = palm.anchor;
    Ok((wxyz, [t.x, t.y, t.z]))
}

pub fn annotate_frame(
    raw: &RawFrame,
    intrinsics: Option<&CameraIntrinsics>,
    profile: &HandProfile,
    object: &ObjectMeta,
    contacts: Option<&[Contact]>,
    opts: &AnnotateOptions,
) -> Result<AnnotatedFrame, String> {
    let frame = raw.to_keypoints(intrinsics).map_err(|e| e.to_string())?;
    let angles = extract_angles(&frame, &opts.layout).map_err(|e| e.to_string())?;
    let (rotation, translation) = palm_pose(&frame, &opts.layout).map_err(|e| e.to_string())?;
    let retargeted = profile.retarget(&angles).map_err(|e| e.to_string())?;
    let actuators = profile
        .actuate(&retargeted.clamped.angles)
        .map_err(|e| e.to_string())?;
    let closure = match contacts {
        Some(c) => {
            let v = contacts_force_closure(c, opts.edges, opts.tol).map_err(|e| e.to_string())?;
            Some(ClosureSummary {
                closed: v.closed,
                margin: v.margin,
            })
        }
        None => None,
    };
    Ok(AnnotatedFrame {
        record: GraspRecord {
            object_id: object.object_id.clone(),
            category: object.category.clone(),
            hand_id: profile.hand_id.clone(),
            rotation,
            translation,
            joints: retargeted.clamped.angles.0,
            closure,
            source_frame: raw.frame_index,
        },
        saturated_joints: retargeted.clamped.saturated,
        actuators,
    })
}

/// Annotates every frame in order. Frames that fail extraction are skipped
/// with a reason; `frames.len() + skipped.len()` equals the input count.
pub fn annotate_stream(
    stream: &KeypointStream,
    profile: &HandProfile,
    object: &ObjectMeta,
    contacts: &HashMap<u64, Vec<Contact>>,
    opts: &AnnotateOptions,
) -> Annotation {
    let mut out = Annotation::default();
    for raw in &stream.frames {
        let c = contacts.get(&raw.frame_index).map(Vec::as_slice);
        match annotate_frame(raw, stream.intrinsics.as_ref(), profile, object, c, opts) {
            Ok(f) => out.frames.push(f),
            Err(reason) => out.skipped.push(SkippedFrame {
                frame_index: raw.frame_index,
                reason,
            }),
        }
    }
    out
}
