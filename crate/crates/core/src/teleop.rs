//! Wrist-driven teleoperation: tracked hand displacement sets the equilibrium
//! of a point-mass cartesian impedance controller.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{preset, CameraModel, Preset};
use crate::geometry::{look_at, RigidTransform, Vec3};
use crate::motion::synth::{vico_duration, vico_path_body, Polyline, SynthKind};
use crate::motion::{Joint, SkeletonPose};
use crate::rng::stream;
use crate::scene::{build_capsules, ActorConfig, ActorMotion, CapsuleRadii};
use crate::tracking::{lift_to_3d, simulate_detection, DetectorConfig, TrackingError};

/// Path RMSE below which a run counts as a success, meters.
pub const SUCCESS_THRESHOLD: f64 = 0.03;
/// The wrist must be seen within this long after start, seconds.
pub const ACQUISITION_WINDOW: f64 = 1.0;
/// Largest integration step the explicit scheme accepts, seconds.
pub const MAX_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TeleopError {
    #[error("time step must lie in (0, {MAX_STEP}] s, got {0}")]
    BadStep(f64),
    #[error("impedance parameters invalid: {0}")]
    BadParams(&'static str),
    #[error("right wrist missing in the {0} pose")]
    WristMissing(&'static str),
    #[error(
        "right wrist not detected during the first {ACQUISITION_WINDOW} s; check camera framing"
    )]
    Framing,
    #[error("right wrist lost at frame {0}")]
    WristLost(usize),
    #[error("rates must be positive")]
    BadRate,
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceParams {
    /// kg.
    pub mass: f64,
    /// N/m, isotropic.
    pub stiffness: f64,
    /// N s/m.
    pub damping: f64,
}

impl ImpedanceParams {
    pub fn critical(mass: f64, stiffness: f64) -> Self {
        ImpedanceParams {
            mass,
            stiffness,
            damping: 2.0 * (stiffness * mass).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<(), TeleopError> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(TeleopError::BadParams("mass must be positive"));
        }
        if !(self.stiffness > 0.0 && self.stiffness.is_finite()) {
            return Err(TeleopError::BadParams("stiffness must be positive"));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(TeleopError::BadParams("damping must be non-negative"));
        }
        Ok(())
    }

    /// Sum of kinetic and spring energy for a state about `desired`.
    pub fn energy(&self, state: &EndEffectorState, desired: &Vec3) -> f64 {
        0.5 * self.mass * state.velocity.norm_squared()
            + 0.5 * self.stiffness * (state.position - desired).norm_squared()
    }
}

impl Default for ImpedanceParams {
    fn default() -> Self {
        ImpedanceParams::critical(1.0, 500.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndEffectorState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub time: f64,
}

impl EndEffectorState {
    pub fn at_rest(position: Vec3) -> Self {
        EndEffectorState {
            position,
            velocity: Vec3::zeros(),
            time: 0.0,
        }
    }
}

/// What the desired pose does while the wrist is not tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropoutPolicy {
    /// Keep the last desired pose.
    #[default]
    Hold,
    /// Pin the desired pose to wherever the end effector currently is.
    Freeze,
    /// Stop the experiment with an error.
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub time: f64,
    pub desired: Vec3,
    pub actual: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleopTrace {
    /// One sample per sensing frame, at the end of its control interval.
    pub samples: Vec<TraceSample>,
    /// Wrist path mapped into end-effector space.
    pub reference: Polyline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleopResult {
    pub trace: TeleopTrace,
    pub path_rmse: f64,
    /// Frames where the wrist was not available after acquisition.
    pub dropouts: usize,
    pub success: bool,
}

pub fn hand_displacement(
    current: &SkeletonPose,
    initial: &SkeletonPose,
) -> Result<Vec3, TeleopError> {
    let c = current
        .get(Joint::RWrist)
        .ok_or(TeleopError::WristMissing("current"))?;
    let i = initial
        .get(Joint::RWrist)
        .ok_or(TeleopError::WristMissing("initial"))?;
    Ok(c - i)
}

pub fn desired_pose(ee_initial: &Vec3, displacement: &Vec3, scale: f64) -> Vec3 {
    ee_initial + displacement * scale
}

/// One semi-implicit Euler step of `m a = K (desired - x) - D v`.
pub fn impedance_step(
    state: &EndEffectorState,
    desired: &Vec3,
    params: &ImpedanceParams,
    dt: f64,
) -> Result<EndEffectorState, TeleopError> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(TeleopError::BadStep(dt));
    }
    let a = ((desired - state.position) * params.stiffness - state.velocity * params.damping)
        / params.mass;
    let velocity = state.velocity + a * dt;
    Ok(EndEffectorState {
        position: state.position + velocity * dt,
        velocity,
        time: state.time + dt,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleopConfig {
    /// The single tracking camera.
    pub camera: CameraModel,
    pub detector: DetectorConfig,
    pub params: ImpedanceParams,
    pub dropout: DropoutPolicy,
    /// End-effector rest position, meters.
    pub ee_initial: Vec3,
    /// Hand-to-robot displacement gain.
    pub scale: f64,
    /// Sensing rate, Hz.
    pub frame_rate: f64,
    /// Controller rate, Hz.
    pub control_rate: f64,
    /// Seconds; the full writing motion by default.
    pub duration: f64,
    pub world_from_root: RigidTransform,
    pub capsule_radii: CapsuleRadii,
    pub seed: u64,
}

impl Default for TeleopConfig {
    fn default() -> Self {
        TeleopConfig {
            camera: teleop_camera(2.0, Preset::KinectV2),
            detector: DetectorConfig::default(),
            params: ImpedanceParams::default(),
            dropout: DropoutPolicy::Hold,
            ee_initial: Vec3::new(0.5, 0.0, 0.5),
            scale: 1.0,
            frame_rate: 30.0,
            control_rate: 1000.0,
            duration: vico_duration(),
            world_from_root: RigidTransform::identity(),
            capsule_radii: CapsuleRadii::default(),
            seed: 0,
        }
    }
}

/// Camera `distance` meters in front of the writer, aimed at the writing area.
pub fn teleop_camera(distance: f64, kind: Preset) -> CameraModel {
    let eye = Vec3::new(0.18, distance, 1.4);
    let target = Vec3::new(0.18, 0.0, 1.2);
    preset(kind)
        .with_pose(look_at(&eye, &target, &Vec3::z()).expect("camera above the floor"))
        .with_id("teleop")
}

/// Pointwise RMS distance to the polyline; zero for an empty set.
pub fn path_rmse(points: &[Vec3], path: &Polyline) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    (points.iter().map(|p| path.distance(p).powi(2)).sum::<f64>() / points.len() as f64).sqrt()
}

/// Writes "VICO" with the tracked wrist driving the controller.
///
/// Each frame the wrist is detected from the single camera and lifted to 3D;
/// the controller then runs at `control_rate` until the next frame.
pub fn run_teleop_experiment(cfg: &TeleopConfig) -> Result<TeleopResult, TeleopError> {
    cfg.params.validate()?;
    if !(cfg.frame_rate > 0.0 && cfg.control_rate > 0.0) {
        return Err(TeleopError::BadRate);
    }
    if !(cfg.scale > 0.0) {
        return Err(TeleopError::BadScale(cfg.scale));
    }
    let actor = ActorConfig {
        motion: ActorMotion::Synth(SynthKind::WriteVico),
        world_from_root: cfg.world_from_root,
    };
    let substeps = (cfg.control_rate / cfg.frame_rate).ceil().max(1.0) as usize;
    let dt = 1.0 / (cfg.frame_rate * substeps as f64);
    let frames = crate::motion::synth::sample_count(cfg.duration, cfg.frame_rate);

    let true_start = actor
        .pose_at(0.0)
        .get(Joint::RWrist)
        .expect("writing pose has a wrist");
    let map = |p: &Vec3| desired_pose(&cfg.ee_initial, &(p - true_start), cfg.scale);
    let world_path = vico_path_body().transformed(&cfg.world_from_root);
    let reference = Polyline::new(world_path.points.iter().map(map).collect());

    let mut state = EndEffectorState::at_rest(cfg.ee_initial);
    let mut desired = cfg.ee_initial;
    let mut initial: Option<SkeletonPose> = None;
    let mut dropouts = 0;
    let mut samples = Vec::with_capacity(frames);
    for k in 0..frames {
        let t = k as f64 / cfg.frame_rate;
        let truth = actor.pose_at(t);
        let capsules = build_capsules(&truth, &cfg.capsule_radii);
        let mut rng = stream(cfg.seed, "teleop", &[k as u64]);
        let det = simulate_detection(
            &cfg.camera,
            k,
            &truth,
            &capsules,
            cfg.detector.pixel_sigma,
            cfg.detector.p_miss,
            &mut rng,
        );
        let est = lift_to_3d(
            &det,
            &cfg.camera,
            &truth,
            &capsules,
            &mut rng,
            cfg.detector.lift_mode,
        )?;
        let mut seen = SkeletonPose::empty(t);
        if let Some(j) = est.joints[Joint::RWrist.index()]
            .filter(|j| j.confidence >= cfg.detector.min_confidence)
        {
            seen.set(Joint::RWrist, Some(j.position));
        }

        match &initial {
            None if seen.get(Joint::RWrist).is_some() => initial = Some(seen),
            None if t >= ACQUISITION_WINDOW => return Err(TeleopError::Framing),
            None => {}
            Some(init) => match hand_displacement(&seen, init) {
                Ok(d) => desired = desired_pose(&cfg.ee_initial, &d, cfg.scale),
                Err(_) => {
                    dropouts += 1;
                    match cfg.dropout {
                        DropoutPolicy::Hold => {}
                        DropoutPolicy::Freeze => desired = state.position,
                        DropoutPolicy::Abort => return Err(TeleopError::WristLost(k)),
                    }
                }
            },
        }
        for _ in 0..substeps {
            state = impedance_step(&state, &desired, &cfg.params, dt)?;
        }
        state.time = (k + 1) as f64 / cfg.frame_rate;
        samples.push(TraceSample {
            time: state.time,
            desired,
            actual: state.position,
        });
    }
    let actual: Vec<Vec3> = samples.iter().map(|s| s.actual).collect();
    let path_rmse = path_rmse(&actual, &reference);
    Ok(TeleopResult {
        trace: TeleopTrace { samples, reference },
        path_rmse,
        dropouts,
        success: path_rmse < SUCCESS_THRESHOLD,
    })
}
