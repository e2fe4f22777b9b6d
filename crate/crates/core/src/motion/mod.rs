//! Motion sources: BVH clips, forward kinematics, joint-name harmonization and
//! parametric synthetic motions.

pub mod bvh;
pub mod fk;
pub mod harmonize;
pub mod skeleton;
pub mod synth;

pub use bvh::{
    parse_bvh, parse_bvh_with_scale, serialize_bvh, BvhClip, BvhError, BvhJoint, Channel,
};
pub use fk::{forward_kinematics, sample_pose, KinematicsError};
pub use harmonize::{harmonize, HarmonizationError, HarmonizationMap};
pub use skeleton::{Joint, JointTable, SkeletonPose, JOINT_COUNT};
pub use synth::{synthesize_motion, Polyline, SynthError, SynthKind, SynthMotion, SynthParams};
