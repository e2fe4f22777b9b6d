//! Extrinsic calibration from a rigid prop seen by several cameras, anchored to
//! the world by a fixed marker.

pub mod experiment;
pub mod extrinsics;
pub mod pnp;
pub mod refine;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{in_image, project, CameraModel};
use crate::geometry::{transform_point, RigidTransform, Rotation, Vec3};
use crate::scene::CalibrationProp;

pub use experiment::{
    calibrate_cameras, default_anchor, run_calibration_experiment, run_scene_calibration,
    simulate_observations, trial_cameras, CalibrationExperimentConfig, ExperimentReport,
    ExperimentRow, SceneCalibration, ANCHOR_SIDE, ANCHOR_TILT_DEG, RING_HEIGHT,
};
pub use extrinsics::{estimate_extrinsics, CalibrationResult};
pub use pnp::{solve_pnp, PnpError, PnpSolution};
pub use refine::{refine_global, RefineReport};

/// Planar props are only detected when viewed closer to face-on than this.
pub const MAX_INCIDENCE_DEG: f64 = 75.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("at least one prop pose is required")]
    NoPoses,
    #[error("workspace box has min above max")]
    InvalidWorkspace,
    #[error("cameras not connected to the anchored camera: {}", .0.join(", "))]
    Disconnected(Vec<String>),
    #[error("no camera observed the world anchor")]
    AnchorNeverObserved,
    #[error("observation from unknown camera `{0}`")]
    UnknownCamera(String),
    #[error("point id {point_id} out of range for `{target}`")]
    BadPointId { target: String, point_id: usize },
    #[error("anchor pose: {0}")]
    AnchorPnp(PnpError),
}

/// Which rigid pattern an observation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Prop,
    Anchor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiducialObservation {
    pub frame_id: usize,
    pub camera_id: String,
    pub target: Target,
    pub point_id: usize,
    pub u: f64,
    pub v: f64,
}

/// Region and orientation spread for random prop placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropWorkspace {
    pub min: Vec3,
    pub max: Vec3,
    /// Half-angle of the cone of facing directions, degrees.
    pub cone_deg: f64,
    pub nominal: Rotation,
    /// Spin the nominal facing to a uniform random heading about world +Z.
    pub random_heading: bool,
}

impl PropWorkspace {
    /// 1 m cube centered at `center`, 40 degree cone, facing world +X then
    /// spun to a random heading.
    pub fn around(center: Vec3) -> Self {
        PropWorkspace {
            min: center - Vec3::repeat(0.5),
            max: center + Vec3::repeat(0.5),
            cone_deg: 40.0,
            nominal: Rotation::rot_y(std::f64::consts::FRAC_PI_2),
            random_heading: true,
        }
    }
}

/// World-from-prop poses: uniform in the box, uniform over the cone cap.
pub fn sample_prop_poses<R: Rng + ?Sized>(
    workspace: &PropWorkspace,
    n: usize,
    rng: &mut R,
) -> Result<Vec<RigidTransform>, CalibrationError> {
    if n < 1 {
        return Err(CalibrationError::NoPoses);
    }
    if (0..3).any(|i| workspace.min[i] > workspace.max[i]) {
        return Err(CalibrationError::InvalidWorkspace);
    }
    let cos_max = workspace.cone_deg.to_radians().cos();
    let mut poses = Vec::with_capacity(n);
    for _ in 0..n {
        let f: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>());
        let position =
            Vec3::from_fn(|i, _| workspace.min[i] + f[i] * (workspace.max[i] - workspace.min[i]));
        let cos_t = 1.0 - f[3] * (1.0 - cos_max);
        let theta = cos_t.clamp(-1.0, 1.0).acos();
        let psi = f[4] * std::f64::consts::TAU;
        let tilt = Rotation::from_axis_angle(&Vec3::new(psi.cos(), psi.sin(), 0.0), theta);
        let heading = if workspace.random_heading {
            Rotation::rot_z(f[5] * std::f64::consts::TAU)
        } else {
            Rotation::identity()
        };
        poses.push(RigidTransform::new(
            heading * workspace.nominal * tilt,
            position,
        ));
    }
    Ok(poses)
}

/// Simulated marker detection: visible fiducials with pixel noise.
///
/// Two normal draws are consumed per fiducial regardless of visibility.
pub fn observe_fiducials<R: Rng + ?Sized>(
    cam: &CameraModel,
    prop: &CalibrationProp,
    world_from_prop: &RigidTransform,
    rng: &mut R,
) -> Vec<(usize, f64, f64)> {
    let facing = if prop.planar {
        let centroid =
            prop.fiducial_points.iter().sum::<Vec3>() / prop.fiducial_points.len() as f64;
        let c = transform_point(world_from_prop, &centroid);
        let n = world_from_prop.rotation.rotate(&prop.normal());
        let to_cam = (cam.center() - c).normalize();
        n.dot(&to_cam) > MAX_INCIDENCE_DEG.to_radians().cos()
    } else {
        true
    };
    let mut out = Vec::new();
    for (id, p) in prop.fiducial_points.iter().enumerate() {
        let nu: f64 = rng.sample(StandardNormal);
        let nv: f64 = rng.sample(StandardNormal);
        if !facing {
            continue;
        }
        let Some(ip) = project(cam, &transform_point(world_from_prop, p)) else {
            continue;
        };
        if !in_image(&cam.intrinsics, ip.u, ip.v) {
            continue;
        }
        out.push((
            id,
            ip.u + cam.pixel_noise_sigma * nu,
            ip.v + cam.pixel_noise_sigma * nv,
        ));
    }
    out
}
