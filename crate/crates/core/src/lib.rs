//! Human-hand keypoints to robot-hand grasp annotations.
//!
//! The pipeline runs keypoints → human joint angles ([`kinematics`]) → robot
//! joint angles ([`retarget`]) → actuator commands ([`actuation`]), checks each
//! grasp with a wrench-space force-closure test ([`force_closure`]), and emits
//! line-delimited grasp records ([`dataset`]).

pub mod actuation;
pub mod dataset;
pub mod force_closure;
pub mod io;
pub mod kinematics;
pub mod linalg;
pub mod lp;
pub mod profile;
pub mod retarget;

pub use actuation::{
    actuators_to_joints, joints_to_actuators, pseudoinverse, ActuatorCommand, CouplingMatrix,
};
pub use dataset::{DatasetManifest, GraspRecord};
pub use force_closure::{
    check_force_closure, cone_edges, grasp_matrix, ClosureVerdict, Contact, WrenchMatrix,
};
pub use kinematics::{
    extract_angles, CameraIntrinsics, Finger, HandSkeletonLayout, HumanHandAngles, KeypointFrame,
};
pub use profile::HandProfile;
pub use retarget::{apply_mapping, fit_mapping, mapping_error, MappingMatrix, RobotHandAngles};
