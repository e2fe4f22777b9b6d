//! Simulated 2D keypoint detection, depth-based 3D lifting, multi-camera
//! fusion by confidence-weighted averaging, and evaluation against ground truth.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{
    apply_depth_noise, back_project, in_image, preset, project, CameraModel, Preset,
};
use crate::geometry::{look_at, Vec3};
use crate::motion::{Joint, JointTable, SkeletonPose, JOINT_COUNT};
use crate::rng::stream;
use crate::scene::{
    build_capsules, default_margin, depth_at_pixel, joint_visible, Capsule, SceneConfig,
};

/// Height of the tracking cameras, meters.
pub const RING_HEIGHT: f64 = 1.2;

/// `count` cameras of one preset on a circle around the actor, the first at
/// azimuth 90 degrees (in front), all aimed at the chest.
pub fn tracking_ring(radius: f64, count: usize, kind: Preset) -> Vec<CameraModel> {
    (0..count)
        .map(|k| {
            let az = std::f64::consts::FRAC_PI_2 + std::f64::consts::TAU * k as f64 / count as f64;
            let eye = Vec3::new(radius * az.cos(), radius * az.sin(), RING_HEIGHT);
            let pose =
                look_at(&eye, &Vec3::new(0.0, 0.0, 1.0), &Vec3::z()).expect("ring camera is level");
            preset(kind).with_pose(pose).with_id(format!("cam{k}"))
        })
        .collect()
}

/// Confidence assigned to every detected joint.
pub const DETECTION_CONFIDENCE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackingError {
    #[error("detection from camera `{detection}` lifted with camera `{camera}`")]
    CameraMismatch { detection: String, camera: String },
    #[error("cannot fuse estimates from different frames ({0} and {1})")]
    MixedFrames(usize, usize),
    #[error("nothing to fuse")]
    NoEstimates,
    #[error("no frames to evaluate")]
    NoOverlap,
    #[error("frame {0}: estimate and ground-truth frame ids disagree")]
    FrameMisaligned(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftMode {
    /// Read the depth surface at the detected pixel.
    DepthLookup,
    /// True joint depth plus sensor noise (ablation).
    DirectDepth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    /// Pixel noise standard deviation, px.
    pub pixel_sigma: f64,
    pub p_miss: f64,
    pub min_confidence: f64,
    pub lift_mode: LiftMode,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            pixel_sigma: 2.0,
            p_miss: 0.02,
            min_confidence: 0.5,
            lift_mode: LiftMode::DepthLookup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub u: f64,
    pub v: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection2D {
    pub camera_id: String,
    pub frame_id: usize,
    /// `None` means not detected (confidence 0).
    pub joints: JointTable<Option<Keypoint>>,
}

impl Detection2D {
    pub fn confidence(&self, joint: Joint) -> f64 {
        self.joints[joint.index()].map_or(0.0, |k| k.confidence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointEstimate {
    pub position: Vec3,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraSkeletonEstimate {
    pub camera_id: String,
    pub frame_id: usize,
    pub joints: JointTable<Option<JointEstimate>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedJoint {
    pub position: Vec3,
    pub contributors: usize,
    /// Mean confidence of the contributors.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedSkeleton {
    pub frame_id: usize,
    pub joints: JointTable<Option<FusedJoint>>,
}

/// Line-of-sight visibility of every present joint.
pub fn visibility(
    cam: &CameraModel,
    pose: &SkeletonPose,
    capsules: &[Capsule],
) -> JointTable<bool> {
    let mut out = [false; JOINT_COUNT];
    for (j, p) in pose.present() {
        out[j.index()] = joint_visible(cam, &p, capsules, Some(j), default_margin(j, capsules));
    }
    out
}

/// Parametric stand-in for a 2D pose detector.
///
/// Every joint consumes the same number of random draws whether or not it is
/// detected, so the stream stays aligned across configurations.
pub fn simulate_detection<R: Rng + ?Sized>(
    cam: &CameraModel,
    frame_id: usize,
    pose: &SkeletonPose,
    capsules: &[Capsule],
    pixel_sigma: f64,
    p_miss: f64,
    rng: &mut R,
) -> Detection2D {
    let visible = visibility(cam, pose, capsules);
    let mut joints = [None; JOINT_COUNT];
    for &j in Joint::ALL {
        let miss_draw: f64 = rng.random();
        let nu: f64 = rng.sample(StandardNormal);
        let nv: f64 = rng.sample(StandardNormal);
        let Some(p) = pose.get(j) else { continue };
        if !visible[j.index()] || miss_draw < p_miss {
            continue;
        }
        let ip = project(cam, &p).expect("visible joints are in front of the camera");
        joints[j.index()] = Some(Keypoint {
            u: ip.u + pixel_sigma * nu,
            v: ip.v + pixel_sigma * nv,
            confidence: DETECTION_CONFIDENCE,
        });
    }
    Detection2D {
        camera_id: cam.id.clone(),
        frame_id,
        joints,
    }
}

/// Lifts detected keypoints to world points.
///
/// `truth` supplies the true joint depth in [`LiftMode::DirectDepth`].
pub fn lift_to_3d<R: Rng + ?Sized>(
    det: &Detection2D,
    cam: &CameraModel,
    truth: &SkeletonPose,
    capsules: &[Capsule],
    rng: &mut R,
    mode: LiftMode,
) -> Result<CameraSkeletonEstimate, TrackingError> {
    if det.camera_id != cam.id {
        return Err(TrackingError::CameraMismatch {
            detection: det.camera_id.clone(),
            camera: cam.id.clone(),
        });
    }
    let mut joints = [None; JOINT_COUNT];
    for &j in Joint::ALL {
        let Some(kp) = det.joints[j.index()] else {
            continue;
        };
        let depth = match mode {
            LiftMode::DepthLookup => {
                if !in_image(&cam.intrinsics, kp.u, kp.v) {
                    None
                } else {
                    depth_at_pixel(cam, kp.u, kp.v, capsules, rng).expect("pixel checked in image")
                }
            }
            LiftMode::DirectDepth => truth
                .get(j)
                .and_then(|p| project(cam, &p))
                .and_then(|ip| apply_depth_noise(&cam.depth_noise, ip.depth, rng)),
        };
        if let Some(z) = depth {
            let position = back_project(cam, kp.u, kp.v, z).expect("depth is positive");
            joints[j.index()] = Some(JointEstimate {
                position,
                confidence: kp.confidence,
            });
        }
    }
    Ok(CameraSkeletonEstimate {
        camera_id: det.camera_id.clone(),
        frame_id: det.frame_id,
        joints,
    })
}

/// Confidence-weighted mean of the contributors to each joint.
///
/// Contributors are summed in camera-id order, which makes the result exactly
/// independent of input order.
pub fn fuse_average(
    estimates: &[CameraSkeletonEstimate],
    min_confidence: f64,
) -> Result<FusedSkeleton, TrackingError> {
    let first = estimates.first().ok_or(TrackingError::NoEstimates)?;
    if let Some(other) = estimates.iter().find(|e| e.frame_id != first.frame_id) {
        return Err(TrackingError::MixedFrames(first.frame_id, other.frame_id));
    }
    let mut ordered: Vec<&CameraSkeletonEstimate> = estimates.iter().collect();
    ordered.sort_by(|a, b| a.camera_id.cmp(&b.camera_id));
    let mut joints = [None; JOINT_COUNT];
    for &j in Joint::ALL {
        let contributors: Vec<JointEstimate> = ordered
            .iter()
            .filter_map(|e| e.joints[j.index()])
            .filter(|je| je.confidence >= min_confidence && je.confidence > 0.0)
            .collect();
        if contributors.is_empty() {
            continue;
        }
        let weight: f64 = contributors.iter().map(|c| c.confidence).sum();
        let position = contributors.iter().fold(Vec3::zeros(), |acc, c| {
            acc + c.position * (c.confidence / weight)
        });
        joints[j.index()] = Some(FusedJoint {
            position,
            contributors: contributors.len(),
            confidence: weight / contributors.len() as f64,
        });
    }
    Ok(FusedSkeleton {
        frame_id: first.frame_id,
        joints,
    })
}

/// Everything computed for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingFrame {
    pub frame_id: usize,
    pub time: f64,
    pub truth: SkeletonPose,
    /// Ground-truth line-of-sight visibility, one table per camera.
    pub visible: Vec<JointTable<bool>>,
    pub detections: Vec<Detection2D>,
    pub estimates: Vec<CameraSkeletonEstimate>,
    pub fused: FusedSkeleton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMetrics {
    /// `None` when estimate and truth never overlap.
    pub rmse: Option<f64>,
    /// `None` when the joint is never present in the ground truth.
    pub detection_rate: Option<f64>,
    /// Frames where both estimate and truth are present.
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceMetrics {
    pub source: String,
    pub joints: JointTable<JointMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingMetrics {
    /// Each camera in scene order, then `fused`.
    pub sources: Vec<SourceMetrics>,
}

impl TrackingMetrics {
    pub fn source(&self, name: &str) -> Option<&SourceMetrics> {
        self.sources.iter().find(|s| s.source == name)
    }
}

pub const FUSED_SOURCE: &str = "fused";

#[derive(Default, Clone, Copy)]
struct Accum {
    sq: f64,
    overlap: usize,
    truth: usize,
}

impl Accum {
    fn add(&mut self, est: Option<Vec3>, truth: Option<Vec3>) {
        if let Some(t) = truth {
            self.truth += 1;
            if let Some(e) = est {
                self.overlap += 1;
                self.sq += (e - t).norm_squared();
            }
        }
    }

    fn finish(self) -> JointMetrics {
        JointMetrics {
            rmse: (self.overlap > 0).then(|| (self.sq / self.overlap as f64).sqrt()),
            detection_rate: (self.truth > 0).then(|| self.overlap as f64 / self.truth as f64),
            frames: self.overlap,
        }
    }
}

/// Per-source, per-joint RMSE and detection rate.
pub fn evaluate_tracking(frames: &[TrackingFrame]) -> Result<TrackingMetrics, TrackingError> {
    let first = frames.first().ok_or(TrackingError::NoOverlap)?;
    let ids: Vec<String> = first
        .estimates
        .iter()
        .map(|e| e.camera_id.clone())
        .collect();
    let mut cams = vec![[Accum::default(); JOINT_COUNT]; ids.len()];
    let mut fused = [Accum::default(); JOINT_COUNT];
    for f in frames {
        if f.fused.frame_id != f.frame_id || f.estimates.iter().any(|e| e.frame_id != f.frame_id) {
            return Err(TrackingError::FrameMisaligned(f.frame_id));
        }
        for &j in Joint::ALL {
            let truth = f.truth.get(j);
            for (acc, est) in cams.iter_mut().zip(&f.estimates) {
                acc[j.index()].add(est.joints[j.index()].map(|e| e.position), truth);
            }
            fused[j.index()].add(f.fused.joints[j.index()].map(|e| e.position), truth);
        }
    }
    let mut sources: Vec<SourceMetrics> = ids
        .into_iter()
        .zip(cams)
        .map(|(source, acc)| SourceMetrics {
            source,
            joints: acc.map(Accum::finish),
        })
        .collect();
    sources.push(SourceMetrics {
        source: FUSED_SOURCE.into(),
        joints: fused.map(Accum::finish),
    });
    Ok(TrackingMetrics { sources })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRun {
    pub frames: Vec<TrackingFrame>,
    pub metrics: TrackingMetrics,
}

/// Processes one frame; pure given the scene and frame index.
pub fn track_frame(scene: &SceneConfig, frame_id: usize) -> Result<TrackingFrame, TrackingError> {
    let time = scene.frame_time(frame_id);
    let truth = scene.actor.pose_at(time);
    let capsules = build_capsules(&truth, &scene.capsule_radii);
    let det_cfg = &scene.detector;
    let mut visible = Vec::with_capacity(scene.cameras.len());
    let mut detections = Vec::with_capacity(scene.cameras.len());
    let mut estimates = Vec::with_capacity(scene.cameras.len());
    for (ci, cam) in scene.cameras.iter().enumerate() {
        let mut rng = stream(scene.master_seed, "tracking", &[frame_id as u64, ci as u64]);
        visible.push(visibility(cam, &truth, &capsules));
        let det = simulate_detection(
            cam,
            frame_id,
            &truth,
            &capsules,
            det_cfg.pixel_sigma,
            det_cfg.p_miss,
            &mut rng,
        );
        estimates.push(lift_to_3d(
            &det,
            cam,
            &truth,
            &capsules,
            &mut rng,
            det_cfg.lift_mode,
        )?);
        detections.push(det);
    }
    let fused = fuse_average(&estimates, det_cfg.min_confidence)?;
    Ok(TrackingFrame {
        frame_id,
        time,
        truth,
        visible,
        detections,
        estimates,
        fused,
    })
}

/// Steps the scene, tracks every frame (in parallel), and scores the result.
pub fn run_tracking_experiment(scene: &SceneConfig) -> Result<TrackingRun, TrackingError> {
    let frames = (0..scene.frame_count())
        .into_par_iter()
        .map(|k| track_frame(scene, k))
        .collect::<Result<Vec<_>, _>>()?;
    let metrics = evaluate_tracking(&frames)?;
    Ok(TrackingRun { frames, metrics })
}
