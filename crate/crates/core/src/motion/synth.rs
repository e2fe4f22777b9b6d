//! Parametric motions in the actor's body frame: +Z up, facing +Y, right hand
//! side toward +X, feet on the Z = 0 plane.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::harmonize::HAND_FALLBACKS;
use super::skeleton::{Joint, SkeletonPose};
use crate::geometry::{transform_point, RigidTransform, Vec3};

pub const UPPER_ARM_LENGTH: f64 = 0.28;
pub const FOREARM_LENGTH: f64 = 0.25;

pub const LETTER_HEIGHT: f64 = 0.2;
pub const LETTER_WIDTH: f64 = 0.15;
pub const LETTER_GAP: f64 = 0.05;
pub const WRITING_SPEED: f64 = 0.1;
/// Writing plane `y = WRITING_PLANE_Y` in the body frame.
pub const WRITING_PLANE_Y: f64 = 0.40;
const WRITING_BASELINE_Z: f64 = 1.05;

const WAVE_PERIOD: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Stand,
    WaveRightArm,
    WriteVico,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("duration must be positive, got {0}")]
    BadDuration(f64),
    #[error("sample rate must be positive, got {0}")]
    BadRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub rate: f64,
    pub world_from_root: RigidTransform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthMotion {
    pub poses: Vec<SkeletonPose>,
    /// World-frame path followed by the right wrist (`write_vico` only).
    pub reference_path: Option<Polyline>,
}

/// Piecewise-linear path with arc-length parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec3>,
}

impl Polyline {
    pub fn new(points: Vec<Vec3>) -> Self {
        Polyline { points }
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Point at arc length `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Vec3 {
        let mut remaining = s.max(0.0);
        for w in self.points.windows(2) {
            let seg = (w[1] - w[0]).norm();
            if remaining <= seg && seg > 0.0 {
                return w[0] + (w[1] - w[0]) * (remaining / seg);
            }
            remaining -= seg;
        }
        *self.points.last().expect("polyline has points")
    }

    /// Euclidean distance from `p` to the nearest point of the path.
    pub fn distance(&self, p: &Vec3) -> f64 {
        if self.points.len() == 1 {
            return (p - self.points[0]).norm();
        }
        self.points
            .windows(2)
            .map(|w| {
                let ab = w[1] - w[0];
                let len2 = ab.norm_squared();
                let s = if len2 > 0.0 {
                    ((p - w[0]).dot(&ab) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (p - (w[0] + ab * s)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, offset: &Vec3) -> Polyline {
        Polyline::new(self.points.iter().map(|p| p + offset).collect())
    }

    pub fn transformed(&self, t: &RigidTransform) -> Polyline {
        Polyline::new(self.points.iter().map(|p| transform_point(t, p)).collect())
    }
}

/// Neutral standing pose, body frame, arms hanging.
pub fn standing_pose() -> SkeletonPose {
    use Joint::*;
    let table: [(Joint, [f64; 3]); 25] = [
        (Nose, [0.0, 0.10, 1.62]),
        (Neck, [0.0, 0.0, 1.50]),
        (RShoulder, [0.18, 0.0, 1.45]),
        (RElbow, [0.21, 0.0, 1.17]),
        (RWrist, [0.23, 0.0, 0.92]),
        (LShoulder, [-0.18, 0.0, 1.45]),
        (LElbow, [-0.21, 0.0, 1.17]),
        (LWrist, [-0.23, 0.0, 0.92]),
        (MidHip, [0.0, 0.0, 0.95]),
        (RHip, [0.10, 0.0, 0.95]),
        (RKnee, [0.10, 0.01, 0.52]),
        (RAnkle, [0.10, 0.0, 0.08]),
        (LHip, [-0.10, 0.0, 0.95]),
        (LKnee, [-0.10, 0.01, 0.52]),
        (LAnkle, [-0.10, 0.0, 0.08]),
        (REye, [0.035, 0.08, 1.66]),
        (LEye, [-0.035, 0.08, 1.66]),
        (REar, [0.075, 0.0, 1.64]),
        (LEar, [-0.075, 0.0, 1.64]),
        (LBigToe, [-0.12, 0.15, 0.02]),
        (LSmallToe, [-0.16, 0.13, 0.02]),
        (LHeel, [-0.10, -0.05, 0.02]),
        (RBigToe, [0.12, 0.15, 0.02]),
        (RSmallToe, [0.16, 0.13, 0.02]),
        (RHeel, [0.10, -0.05, 0.02]),
    ];
    let mut pose = SkeletonPose::empty(0.0);
    for (j, [x, y, z]) in table {
        pose.set(j, Some(Vec3::new(x, y, z)));
    }
    fill_hands(&mut pose);
    pose
}

fn fill_hands(pose: &mut SkeletonPose) {
    for (hand, wrist) in HAND_FALLBACKS {
        pose.set(hand, pose.get(wrist));
    }
}

/// V-I-C-O as one continuous stroke in the body-frame writing plane.
pub fn vico_path_body() -> Polyline {
    let (w, h, g) = (LETTER_WIDTH, LETTER_HEIGHT, LETTER_GAP);
    let total = 4.0 * w + 3.0 * g;
    let x0 = standing_pose().get(Joint::RShoulder).unwrap().x - total / 2.0;
    let cell = |i: usize| x0 + i as f64 * (w + g);
    let p = |x: f64, z: f64| Vec3::new(x, WRITING_PLANE_Y, WRITING_BASELINE_Z + z);
    let (v, i, c, o) = (cell(0), cell(1), cell(2), cell(3));
    Polyline::new(vec![
        // V
        p(v, h),
        p(v + w / 2.0, 0.0),
        p(v + w, h),
        // I
        p(i + w / 2.0, h),
        p(i + w / 2.0, 0.0),
        // C
        p(c + w, h),
        p(c, h),
        p(c, 0.0),
        p(c + w, 0.0),
        // O
        p(o, 0.0),
        p(o + w, 0.0),
        p(o + w, h),
        p(o, h),
        p(o, 0.0),
    ])
}

/// Seconds needed to trace the whole path at the writing speed.
pub fn vico_duration() -> f64 {
    vico_path_body().length() / WRITING_SPEED
}

fn writing_pose() -> SkeletonPose {
    let mut pose = standing_pose();
    pose.set(Joint::RElbow, Some(Vec3::new(0.26, 0.22, 1.18)));
    pose
}

/// Elbow for a two-bone arm reaching `wrist`, bent toward `pole`.
fn solve_elbow(shoulder: &Vec3, wrist: &Vec3, pole: &Vec3) -> Vec3 {
    let (a, b) = (UPPER_ARM_LENGTH, FOREARM_LENGTH);
    let d_vec = wrist - shoulder;
    let d = d_vec.norm().clamp(1e-9, a + b);
    let axis = d_vec / d_vec.norm();
    let along = (a * a - b * b + d * d) / (2.0 * d);
    let h = (a * a - along * along).max(0.0).sqrt();
    let bend = (pole - axis * pole.dot(&axis)).normalize();
    shoulder + axis * along + bend * h
}

/// Body-frame pose of `kind` at time `t`.
pub fn body_pose_at(kind: SynthKind, t: f64) -> SkeletonPose {
    let mut pose = match kind {
        SynthKind::Stand => standing_pose(),
        SynthKind::WaveRightArm => {
            let mut pose = standing_pose();
            let phase = 2.0 * std::f64::consts::PI * t / WAVE_PERIOD;
            let sweep = 0.5 - 0.5 * phase.cos();
            let wrist = Vec3::new(0.30 - 0.35 * sweep, 0.30, 1.55 + 0.04 * phase.sin());
            let shoulder = pose.get(Joint::RShoulder).unwrap();
            let elbow = solve_elbow(&shoulder, &wrist, &Vec3::new(1.0, 0.0, -1.0));
            pose.set(Joint::RElbow, Some(elbow));
            pose.set(Joint::RWrist, Some(wrist));
            pose
        }
        SynthKind::WriteVico => {
            let mut pose = writing_pose();
            pose.set(
                Joint::RWrist,
                Some(vico_path_body().point_at(WRITING_SPEED * t)),
            );
            pose
        }
    };
    fill_hands(&mut pose);
    pose.timestamp = t;
    pose
}

pub fn pose_at(kind: SynthKind, t: f64, world_from_root: &RigidTransform) -> SkeletonPose {
    body_pose_at(kind, t).transformed(world_from_root)
}

/// Number of samples covering `duration` at `rate` (at least one).
pub fn sample_count(duration: f64, rate: f64) -> usize {
    ((duration * rate + 1e-9).floor() as usize).max(1)
}

pub fn synthesize_motion(kind: SynthKind, params: &SynthParams) -> Result<SynthMotion, SynthError> {
    if !(params.duration > 0.0) {
        return Err(SynthError::BadDuration(params.duration));
    }
    if !(params.rate > 0.0) {
        return Err(SynthError::BadRate(params.rate));
    }
    let n = sample_count(params.duration, params.rate);
    let poses = (0..n)
        .map(|k| pose_at(kind, k as f64 / params.rate, &params.world_from_root))
        .collect();
    let reference_path = match kind {
        SynthKind::WriteVico => Some(vico_path_body().transformed(&params.world_from_root)),
        _ => None,
    };
    Ok(SynthMotion {
        poses,
        reference_path,
    })
}
