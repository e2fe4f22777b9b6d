//! Radius-sweep calibration experiment and single-scene calibration runs.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::camera::{preset, CameraIntrinsics, CameraModel, Preset};
use crate::geometry::{look_at, pose_error, PoseError, RigidTransform, Rotation, Vec3};
use crate::rng::{derive_seed, stream};
use crate::scene::{CalibrationProp, SceneConfig, WorldAnchor};

use super::{
    estimate_extrinsics, observe_fiducials, refine_global, sample_prop_poses, CalibrationError,
    CalibrationResult, FiducialObservation, PropWorkspace, RefineReport, Target,
};

/// Height of the camera ring and of the workspace center, meters.
pub const RING_HEIGHT: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationExperimentConfig {
    pub radii: Vec<f64>,
    pub props: Vec<CalibrationProp>,
    pub camera_count: usize,
    pub frames: usize,
    /// Pixel noise, px.
    pub pixel_sigma: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub preset: Preset,
    pub anchor: WorldAnchor,
    pub refine: bool,
}

impl Default for CalibrationExperimentConfig {
    fn default() -> Self {
        CalibrationExperimentConfig {
            radii: vec![2.0, 3.0, 4.0, 5.0],
            props: vec![CalibrationProp::checkerboard(), CalibrationProp::cluster8()],
            camera_count: 4,
            frames: 30,
            pixel_sigma: 1.0,
            trials: 20,
            master_seed: 0,
            preset: Preset::KinectV2,
            anchor: default_anchor(),
            refine: true,
        }
    }
}

/// Marker below the ring center, leaning back toward the first camera.
pub fn default_anchor() -> WorldAnchor {
    WorldAnchor {
        marker: CalibrationProp::square_marker("anchor", ANCHOR_SIDE),
        world_from_marker: RigidTransform::new(
            Rotation::rot_y(ANCHOR_TILT_DEG.to_radians()),
            Vec3::new(0.0, 0.0, 0.5),
        ),
    }
}

pub const ANCHOR_SIDE: f64 = 0.4;
/// Marker normal measured from vertical toward world +X.
pub const ANCHOR_TILT_DEG: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub radius: f64,
    pub prop: String,
    pub trial: usize,
    /// Mean over cameras, meters.
    pub mean_translation_error: f64,
    /// Mean over cameras, radians.
    pub mean_rotation_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    /// Trial-mean translation error for each prop at each radius, in row order.
    pub fn trial_means(&self) -> Vec<(String, f64, f64)> {
        let mut acc: Vec<(String, f64, f64, usize)> = Vec::new();
        for r in &self.rows {
            match acc
                .iter_mut()
                .find(|(p, rad, _, _)| *p == r.prop && *rad == r.radius)
            {
                Some(e) => {
                    e.2 += r.mean_translation_error;
                    e.3 += 1;
                }
                None => acc.push((r.prop.clone(), r.radius, r.mean_translation_error, 1)),
            }
        }
        acc.into_iter()
            .map(|(p, r, s, n)| (p, r, s / n as f64))
            .collect()
    }
}

/// `count` cameras evenly spaced on a horizontal circle, all looking at its center.
pub fn trial_cameras(
    radius: f64,
    count: usize,
    height: f64,
    kind: Preset,
    pixel_sigma: f64,
) -> Vec<CameraModel> {
    let center = Vec3::new(0.0, 0.0, height);
    (0..count)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / count as f64;
            let eye = Vec3::new(radius * a.cos(), radius * a.sin(), height);
            let mut cam = preset(kind)
                .with_pose(look_at(&eye, &center, &Vec3::z()).expect("level ring view"))
                .with_id(format!("cam{k}"));
            cam.pixel_noise_sigma = pixel_sigma;
            cam
        })
        .collect()
}

/// Observations of the prop at every pose and of the anchor in every frame.
///
/// Each (frame, camera, target) draws from its own stream under `seed`.
pub fn simulate_observations(
    cameras: &[CameraModel],
    prop: &CalibrationProp,
    poses: &[RigidTransform],
    anchor: &WorldAnchor,
    seed: u64,
) -> Vec<FiducialObservation> {
    let mut out = Vec::new();
    for (frame, pose) in poses.iter().enumerate() {
        for (ci, cam) in cameras.iter().enumerate() {
            for (target, pattern, world_from) in [
                (Target::Prop, prop, pose),
                (Target::Anchor, &anchor.marker, &anchor.world_from_marker),
            ] {
                let mut rng = stream(seed, "fiducials", &[frame as u64, ci as u64, target as u64]);
                for (point_id, u, v) in observe_fiducials(cam, pattern, world_from, &mut rng) {
                    out.push(FiducialObservation {
                        frame_id: frame,
                        camera_id: cam.id.clone(),
                        target,
                        point_id,
                        u,
                        v,
                    });
                }
            }
        }
    }
    out
}

fn intrinsics_map(cameras: &[CameraModel]) -> BTreeMap<String, CameraIntrinsics> {
    cameras
        .iter()
        .map(|c| (c.id.clone(), c.intrinsics))
        .collect()
}

fn mean_error(result: &CalibrationResult, cameras: &[CameraModel]) -> (f64, f64) {
    let errs: Vec<PoseError> = cameras
        .iter()
        .map(|c| pose_error(&result.world_from_camera[&c.id], &c.world_from_camera))
        .collect();
    let n = errs.len() as f64;
    (
        errs.iter().map(|e| e.translation_error).sum::<f64>() / n,
        errs.iter().map(|e| e.rotation_error).sum::<f64>() / n,
    )
}

/// Everything produced by one calibration of a concrete camera set.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneCalibration {
    pub prop_poses: Vec<RigidTransform>,
    pub observations: Vec<FiducialObservation>,
    pub initial: CalibrationResult,
    pub refined: Option<(CalibrationResult, RefineReport)>,
    /// Final estimate against ground truth, per camera.
    pub errors: BTreeMap<String, PoseError>,
}

impl SceneCalibration {
    pub fn final_result(&self) -> &CalibrationResult {
        self.refined.as_ref().map_or(&self.initial, |(r, _)| r)
    }
}

/// Full pipeline on the given cameras: sample, observe, estimate, refine.
pub fn calibrate_cameras(
    cameras: &[CameraModel],
    prop: &CalibrationProp,
    anchor: &WorldAnchor,
    workspace: &PropWorkspace,
    frames: usize,
    seed: u64,
    refine: bool,
) -> Result<SceneCalibration, CalibrationError> {
    let prop_poses = sample_prop_poses(workspace, frames, &mut stream(seed, "prop_poses", &[]))?;
    let observations = simulate_observations(cameras, prop, &prop_poses, anchor, seed);
    let intr = intrinsics_map(cameras);
    let initial = estimate_extrinsics(&observations, prop, anchor, &intr)?;
    let refined = if refine {
        Some(refine_global(&initial, &observations, prop, anchor, &intr)?)
    } else {
        None
    };
    let final_result = refined.as_ref().map_or(&initial, |(r, _)| r);
    let errors = cameras
        .iter()
        .map(|c| {
            (
                c.id.clone(),
                pose_error(&final_result.world_from_camera[&c.id], &c.world_from_camera),
            )
        })
        .collect();
    Ok(SceneCalibration {
        prop_poses,
        observations,
        initial,
        refined,
        errors,
    })
}

/// Calibrates the scene's own cameras with its prop and anchor.
pub fn run_scene_calibration(
    scene: &SceneConfig,
    workspace: &PropWorkspace,
    frames: usize,
    refine: bool,
) -> Result<SceneCalibration, CalibrationError> {
    let seed = derive_seed(scene.master_seed, "scene_calibration", &[]);
    calibrate_cameras(
        &scene.cameras,
        &scene.prop,
        &scene.anchor,
        workspace,
        frames,
        seed,
        refine,
    )
}

/// One row per (radius, prop, trial); trials run in parallel with derived seeds.
pub fn run_calibration_experiment(
    cfg: &CalibrationExperimentConfig,
) -> Result<ExperimentReport, CalibrationError> {
    let jobs: Vec<(usize, usize, usize)> = (0..cfg.radii.len())
        .flat_map(|ri| {
            (0..cfg.props.len()).flat_map(move |pi| (0..cfg.trials).map(move |t| (ri, pi, t)))
        })
        .collect();
    let workspace = PropWorkspace::around(Vec3::new(0.0, 0.0, RING_HEIGHT));
    let rows = jobs
        .par_iter()
        .map(|&(ri, pi, trial)| {
            let radius = cfg.radii[ri];
            let prop = &cfg.props[pi];
            let cameras = trial_cameras(
                radius,
                cfg.camera_count,
                RING_HEIGHT,
                cfg.preset,
                cfg.pixel_sigma,
            );
            let seed = derive_seed(
                cfg.master_seed,
                "calibration",
                &[ri as u64, pi as u64, trial as u64],
            );
            let run = calibrate_cameras(
                &cameras,
                prop,
                &cfg.anchor,
                &workspace,
                cfg.frames,
                seed,
                cfg.refine,
            )?;
            let (t, r) = mean_error(run.final_result(), &cameras);
            Ok(ExperimentRow {
                radius,
                prop: prop.name.clone(),
                trial,
                mean_translation_error: t,
                mean_rotation_error: r,
            })
        })
        .collect::<Result<Vec<_>, CalibrationError>>()?;
    Ok(ExperimentReport { rows })
}
