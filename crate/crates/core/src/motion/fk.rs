use std::collections::BTreeMap;

use thiserror::Error;

use super::bvh::{BvhClip, BvhJoint};
use super::harmonize::{harmonize, HarmonizationMap};
use super::skeleton::SkeletonPose;
use crate::geometry::{compose, transform_point, RigidTransform, Rotation, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("frame index {index} out of range (clip has {count} frames)")]
    FrameOutOfRange { index: usize, count: usize },
    #[error("time {t} s outside clip range [0, {end}] s")]
    TimeOutOfRange { t: f64, end: f64 },
}

/// Joint positions (clip root frame, meters) for one frame.
pub fn forward_kinematics(
    clip: &BvhClip,
    frame_index: usize,
) -> Result<BTreeMap<String, Vec3>, KinematicsError> {
    let row = clip
        .frames
        .get(frame_index)
        .ok_or(KinematicsError::FrameOutOfRange {
            index: frame_index,
            count: clip.frames.len(),
        })?;
    Ok(evaluate_row(&clip.root, row))
}

/// Evaluates the hierarchy for one row of channel values.
pub fn evaluate_row(root: &BvhJoint, row: &[f64]) -> BTreeMap<String, Vec3> {
    let mut out = BTreeMap::new();
    let mut cursor = 0;
    visit(
        root,
        &RigidTransform::identity(),
        row,
        &mut cursor,
        &mut out,
    );
    out
}

fn visit(
    joint: &BvhJoint,
    parent: &RigidTransform,
    row: &[f64],
    cursor: &mut usize,
    out: &mut BTreeMap<String, Vec3>,
) {
    let mut translation = joint.offset;
    let mut rotation = Rotation::identity();
    for ch in &joint.channels {
        let v = row[*cursor];
        *cursor += 1;
        if ch.is_position() {
            translation[ch.axis()] += v;
        } else {
            let mut axis = Vec3::zeros();
            axis[ch.axis()] = 1.0;
            rotation = rotation * Rotation::from_axis_angle(&axis, v.to_radians());
        }
    }
    let world = compose(parent, &RigidTransform::new(rotation, translation));
    out.insert(joint.name.clone(), world.translation);
    for child in &joint.children {
        visit(child, &world, row, cursor, out);
    }
}

/// Channel row linearly interpolated at time `t`.
pub fn interpolate_row(clip: &BvhClip, t: f64) -> Result<Vec<f64>, KinematicsError> {
    let end = clip.duration();
    let tol = 1e-9 * clip.frame_time.max(1.0);
    if !(t >= -tol && t <= end + tol) {
        return Err(KinematicsError::TimeOutOfRange { t, end });
    }
    let x = (t / clip.frame_time).clamp(0.0, (clip.frames.len() - 1) as f64);
    let k = (x.floor() as usize).min(clip.frames.len() - 1);
    let frac = x - k as f64;
    if frac == 0.0 || k + 1 >= clip.frames.len() {
        return Ok(clip.frames[k].clone());
    }
    Ok(clip.frames[k]
        .iter()
        .zip(&clip.frames[k + 1])
        .map(|(a, b)| a + (b - a) * frac)
        .collect())
}

/// Interpolates, evaluates, renames and places the clip pose in the world.
pub fn sample_pose(
    clip: &BvhClip,
    t: f64,
    world_from_root: &RigidTransform,
    map: &HarmonizationMap,
) -> Result<SkeletonPose, KinematicsError> {
    let row = interpolate_row(clip, t)?;
    let raw: BTreeMap<String, Vec3> = evaluate_row(&clip.root, &row)
        .into_iter()
        .map(|(k, p)| (k, transform_point(world_from_root, &p)))
        .collect();
    Ok(SkeletonPose {
        timestamp: t,
        joints: harmonize(&raw, map),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::bvh::parse_bvh_with_scale;
    use crate::motion::skeleton::Joint;

    const CHAIN: &str = "HIERARCHY
ROOT A
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT B
  {
    OFFSET 0 1 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    JOINT C
    {
      OFFSET 0 1 0
      CHANNELS 3 Zrotation Xrotation Yrotation
      End Site
      {
        OFFSET 0 1 0
      }
    }
  }
}
MOTION
Frames: 3
Frame Time: 0.1
0 0 0 0 0 0 0 0 0 0 0 0
0 0 0 90 0 0 0 0 0 0 0 0
1 0 0 90 0 0 0 0 0 0 0 0
";

    fn chain() -> BvhClip {
        parse_bvh_with_scale(CHAIN, 1.0).unwrap()
    }

    #[test]
    fn zero_configuration_sums_offsets() {
        let pos = forward_kinematics(&chain(), 0).unwrap();
        assert_eq!(pos["A"], Vec3::zeros());
        assert_eq!(pos["B"], Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(pos["C"], Vec3::new(0.0, 2.0, 0.0));
    }

    #[test]
    fn planar_chain_quarter_turn() {
        let pos = forward_kinematics(&chain(), 1).unwrap();
        assert!((pos["B"] - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((pos["C"] - Vec3::new(-2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn frame_out_of_range() {
        assert_eq!(
            forward_kinematics(&chain(), 3),
            Err(KinematicsError::FrameOutOfRange { index: 3, count: 3 })
        );
    }

    #[test]
    fn sampling_on_knots_and_midpoints() {
        let clip = chain();
        let map = HarmonizationMap::new(
            [
                ("A".to_string(), Joint::MidHip),
                ("C".to_string(), Joint::Neck),
            ],
            [],
        )
        .unwrap();
        let on_knot = sample_pose(&clip, 0.1, &RigidTransform::identity(), &map).unwrap();
        let fk = forward_kinematics(&clip, 1).unwrap();
        assert!((on_knot.get(Joint::Neck).unwrap() - fk["C"]).norm() < 1e-12);

        let mid = sample_pose(&clip, 0.15, &RigidTransform::identity(), &map).unwrap();
        assert!((mid.get(Joint::MidHip).unwrap() - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-12);

        let shift = RigidTransform::from_translation(Vec3::new(5.0, 0.0, 0.0));
        let shifted = sample_pose(&clip, 0.15, &shift, &map).unwrap();
        for j in [Joint::MidHip, Joint::Neck] {
            let d = shifted.get(j).unwrap() - mid.get(j).unwrap();
            assert!((d - Vec3::new(5.0, 0.0, 0.0)).norm() < 1e-12);
        }
        assert!(matches!(
            sample_pose(&clip, 0.3, &RigidTransform::identity(), &map),
            Err(KinematicsError::TimeOutOfRange { .. })
        ));
    }
}
