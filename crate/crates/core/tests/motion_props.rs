mod common;

use std::collections::BTreeMap;

use common::{fixture, vec3};
use humtrack_core::geometry::{RigidTransform, Vec3};
use humtrack_core::motion::fk::evaluate_row;
use humtrack_core::motion::{
    forward_kinematics, harmonize, parse_bvh, parse_bvh_with_scale, sample_pose, serialize_bvh,
    BvhClip, HarmonizationMap, Joint,
};
use proptest::prelude::*;

fn sway() -> BvhClip {
    parse_bvh(&fixture("sway.bvh")).unwrap()
}

/// Parent-child distances of every joint pair linked in the hierarchy.
fn bone_lengths(clip: &BvhClip, row: &[f64]) -> Vec<f64> {
    let pos = evaluate_row(&clip.root, row);
    let mut out = Vec::new();
    for j in clip.root.iter() {
        for c in &j.children {
            out.push((pos[&j.name] - pos[&c.name]).norm());
        }
    }
    out
}

#[test]
fn fixture_clip_is_rigid_across_frames() {
    let clip = sway();
    assert_eq!(clip.frame_count(), 60);
    let first = bone_lengths(&clip, &clip.frames[0]);
    for row in &clip.frames {
        for (a, b) in first.iter().zip(bone_lengths(&clip, row)) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn fixture_harmonizes_to_a_full_skeleton() {
    let pose = sample_pose(
        &sway(),
        0.5,
        &RigidTransform::identity(),
        &HarmonizationMap::default_bvh(),
    )
    .unwrap();
    assert!(Joint::ALL.iter().all(|&j| pose.get(j).is_some()));
    assert_eq!(pose.get(Joint::RHand), pose.get(Joint::RWrist));
    assert!((pose.get(Joint::MidHip).unwrap().z - 0.95).abs() < 1e-12);
}

#[test]
fn two_bone_fixture_matches_hand_computation() {
    let clip = parse_bvh_with_scale(&fixture("two_bone.bvh"), 1.0).unwrap();
    let pos = forward_kinematics(&clip, 1).unwrap();
    // Root turned 90 degrees about Z, then B turned 90 degrees about Z again.
    assert!((pos["B"] - Vec3::new(-1.0, 0.0, 0.0)).norm() <= 1e-12);
    assert!((pos["C"] - Vec3::new(-1.0, -1.0, 0.0)).norm() <= 1e-12);
}

#[test]
fn fixture_round_trips() {
    let clip = sway();
    let again = parse_bvh(&serialize_bvh(&clip)).unwrap();
    assert_eq!(serialize_bvh(&again), serialize_bvh(&clip));
    assert_eq!(again.root, clip.root);
    for (a, b) in again
        .frames
        .iter()
        .flatten()
        .zip(clip.frames.iter().flatten())
    {
        assert!((a - b).abs() <= 1e-9);
    }
}

fn random_rows(channels: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-180.0..180.0f64, channels), 1..6)
}

proptest! {
    #[test]
    fn rotations_only_keep_bones_rigid(rows in random_rows(63)) {
        let mut clip = sway();
        // Root translation is a position channel on the root, which keeps rigidity.
        clip.frames = rows;
        let first = bone_lengths(&clip, &clip.frames[0]);
        for row in &clip.frames {
            for (a, b) in first.iter().zip(bone_lengths(&clip, row)) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn serialize_parse_is_a_fixed_point(rows in random_rows(63)) {
        let mut clip = sway();
        clip.frames = rows;
        let once = serialize_bvh(&parse_bvh(&serialize_bvh(&clip)).unwrap());
        let twice = serialize_bvh(&parse_bvh(&once).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn sampling_is_continuous(t in 0.0..1.9f64) {
        let clip = sway();
        let map = HarmonizationMap::default_bvh();
        let a = sample_pose(&clip, t, &RigidTransform::identity(), &map).unwrap();
        let b = sample_pose(&clip, t + 1e-6, &RigidTransform::identity(), &map).unwrap();
        for &j in Joint::ALL {
            prop_assert!((a.get(j).unwrap() - b.get(j).unwrap()).norm() < 1e-3);
        }
    }

    #[test]
    fn harmonize_only_copies(points in prop::collection::vec(vec3(2.0), 0..20), mask in any::<u32>()) {
        let names = ["Hips", "Neck", "Head", "RightArm", "RightForeArm", "RightHand", "LeftArm", "LeftHand", "RightUpLeg",
            "RightLeg", "RightFoot", "RightToeBase", "LeftUpLeg", "LeftLeg", "LeftFoot", "LeftToeBase", "Spine", "Extra",
            "LeftForeArm", "RightShoulder"];
        let raw: BTreeMap<String, Vec3> = points
            .iter()
            .zip(names)
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, (p, n))| (n.to_string(), *p))
            .collect();
        let out = harmonize(&raw, &HarmonizationMap::default_bvh());
        for p in out.iter().flatten() {
            prop_assert!(raw.values().any(|q| q == p));
        }
    }
}
