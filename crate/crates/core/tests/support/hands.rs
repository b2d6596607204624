//! Synthetic hands built from known joint angles.

use graspmap_core::kinematics::{KeypointFrame, NUM_KEYPOINTS};
use nalgebra::{Point3, Rotation3, Unit, Vector3};
use rand::Rng;

/// Expected `[abduction, flex0, flex1, flex2]` per finger.
pub type FingerTruth = [f64; 4];

/// Palm in the z = 0 plane, wrist at the origin. The middle finger's base
/// angle must be 0 and its first length 0.04 so that the palm center stays the
/// wrist/middle-base midpoint.
/// Each finger first turns in the palm plane by `abduction`, then curls in the
/// plane spanned by the turned direction and the palm normal.
pub fn build_hand(
    base_angles: [f64; 5],
    lengths: [[f64; 4]; 5],
    pose: [[f64; 4]; 5],
) -> (KeypointFrame, [FingerTruth; 5]) {
    let normal = Vector3::z();
    let palm = Point3::new(0.0, 0.04, 0.0);
    let mut pts = vec![Point3::origin(); NUM_KEYPOINTS];
    let mut truth = [[0.0; 4]; 5];
    for f in 0..5 {
        let [abd, p1, p2, p3] = pose[f];
        let [l0, l1, l2, l3] = lengths[f];
        let a = base_angles[f];
        let dir0 = Vector3::new(a.sin(), a.cos(), 0.0);
        let base = palm + dir0 * l0;
        let turned = Rotation3::from_axis_angle(&Unit::new_unchecked(normal), abd) * dir0;
        let axis = Unit::new_normalize(turned.cross(&normal));
        let seg = |phi: f64| Rotation3::from_axis_angle(&axis, phi) * turned;
        let mut p = base;
        let chain = 1 + 4 * f;
        pts[chain] = base;
        for (k, (phi, len)) in [(p1, l1), (p1 + p2, l2), (p1 + p2 + p3, l3)].into_iter().enumerate() {
            p += seg(phi) * len;
            pts[chain + k + 1] = p;
        }
        truth[f] = [abd, (abd.cos() * p1.cos()).clamp(-1.0, 1.0).acos(), p2, p3];
    }
    (KeypointFrame::new(0, pts).unwrap(), truth)
}

/// A random, well-conditioned hand with its expected angles.
pub fn random_hand(rng: &mut impl Rng) -> (KeypointFrame, [FingerTruth; 5]) {
    let mut base_angles = [-1.1, -0.35, 0.0, 0.3, 0.6].map(|a: f64| a + rng.random_range(-0.08..0.08));
    base_angles[2] = 0.0;
    let mut lengths = [[0.0; 4]; 5];
    let mut pose = [[0.0; 4]; 5];
    for f in 0..5 {
        lengths[f] = [
            0.04,
            rng.random_range(0.025..0.05),
            rng.random_range(0.02..0.035),
            rng.random_range(0.015..0.03),
        ];
        pose[f] = [
            rng.random_range(0.0..0.35),
            rng.random_range(0.05..1.2),
            rng.random_range(0.05..1.2),
            rng.random_range(0.05..0.9),
        ];
    }
    build_hand(base_angles, lengths, pose)
}
