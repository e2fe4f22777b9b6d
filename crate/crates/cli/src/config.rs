//! TOML scene configuration: schema, strict parsing and validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use humtrack_core::calibration::{
    default_anchor, CalibrationExperimentConfig, ANCHOR_SIDE, ANCHOR_TILT_DEG,
};
use humtrack_core::camera::{
    preset, CameraIntrinsics, CameraModel, DepthNoiseModel, Preset, DEFAULT_PIXEL_NOISE,
};
use humtrack_core::geometry::{look_at, RigidTransform, Rotation, Vec3};
use humtrack_core::motion::bvh::DEFAULT_UNIT_SCALE;
use humtrack_core::motion::{parse_bvh_with_scale, HarmonizationMap, SynthKind};
use humtrack_core::scene::{
    ActorConfig, ActorMotion, BodyPart, CalibrationProp, SceneConfig, WorldAnchor,
};
use humtrack_core::teleop::{DropoutPolicy, ImpedanceParams};
use humtrack_core::tracking::DetectorConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{field}: duplicate camera id `{id}`")]
    DuplicateCamera { field: String, id: String },
    #[error("{field}: cannot load `{path}`: {reason}")]
    Motion {
        field: String,
        path: PathBuf,
        reason: String,
    },
}

fn invalid(field: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

fn default_frame_rate() -> f64 {
    30.0
}

fn default_prop() -> String {
    "checkerboard".into()
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// The whole configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: u64,
    /// Seconds.
    pub duration: f64,
    /// Hz.
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    /// Calibration prop name: `checkerboard` or `cluster8`.
    #[serde(default = "default_prop")]
    pub prop: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub appearance: BTreeMap<String, String>,
    pub cameras: Vec<CameraSpec>,
    pub actor: ActorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorSpec>,
    /// Overrides of the default radius per body part, meters.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub capsule_radii: BTreeMap<BodyPart, f64>,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teleop: Option<TeleopSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<IntrinsicsSpec>,
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    /// Fiducial pixel noise, px.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixel_noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_noise: Option<DepthNoiseSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthNoiseSpec {
    pub sigma0: f64,
    pub sigma1: f64,
    pub max_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthKind>,
    /// BVH clip, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bvh: Option<PathBuf>,
    /// Joint-name map (TOML) for the clip; the common mocap naming otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<PathBuf>,
    /// Meters per BVH unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_scale: Option<f64>,
    /// Root placement in the world.
    #[serde(default)]
    pub position: [f64; 3],
    /// Heading about world +Z, degrees.
    #[serde(default)]
    pub yaw_deg: f64,
}

fn default_anchor_side() -> f64 {
    ANCHOR_SIDE
}

fn default_anchor_position() -> [f64; 3] {
    let t = default_anchor().world_from_marker.translation;
    [t.x, t.y, t.z]
}

fn default_anchor_tilt() -> f64 {
    ANCHOR_TILT_DEG
}

/// Square world marker, tilted about world +Y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    #[serde(default = "default_anchor_side")]
    pub side: f64,
    #[serde(default = "default_anchor_position")]
    pub position: [f64; 3],
    #[serde(default = "default_anchor_tilt")]
    pub tilt_deg: f64,
}

impl Default for AnchorSpec {
    fn default() -> Self {
        AnchorSpec {
            side: ANCHOR_SIDE,
            position: default_anchor_position(),
            tilt_deg: ANCHOR_TILT_DEG,
        }
    }
}

/// Settings for `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSpec {
    pub radii: Vec<f64>,
    pub props: Vec<String>,
    pub camera_count: usize,
    pub frames: usize,
    pub pixel_sigma: f64,
    pub trials: usize,
    pub preset: Preset,
    pub refine: bool,
    /// Calibrate the scene's own cameras instead of sweeping ring radii.
    #[serde(skip_serializing_if = "is_false")]
    pub scene: bool,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        let d = CalibrationExperimentConfig::default();
        CalibrationSpec {
            radii: d.radii,
            props: d.props.into_iter().map(|p| p.name).collect(),
            camera_count: d.camera_count,
            frames: d.frames,
            pixel_sigma: d.pixel_sigma,
            trials: d.trials,
            preset: d.preset,
            refine: d.refine,
            scene: false,
        }
    }
}

impl CalibrationSpec {
    pub fn experiment(
        &self,
        master_seed: u64,
        anchor: &WorldAnchor,
    ) -> Result<CalibrationExperimentConfig, ConfigError> {
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(invalid(
                "calibration.radii",
                "need at least one positive radius",
            ));
        }
        if self.camera_count < 2 {
            return Err(invalid(
                "calibration.camera_count",
                "need at least 2 cameras",
            ));
        }
        if self.frames < 1 {
            return Err(invalid("calibration.frames", "must be at least 1"));
        }
        if self.trials < 1 {
            return Err(invalid("calibration.trials", "must be at least 1"));
        }
        if !(self.pixel_sigma >= 0.0 && self.pixel_sigma.is_finite()) {
            return Err(invalid("calibration.pixel_sigma", "must be non-negative"));
        }
        if self.props.is_empty() {
            return Err(invalid("calibration.props", "need at least one prop"));
        }
        let props = self
            .props
            .iter()
            .enumerate()
            .map(|(i, name)| prop_by_name(name, &format!("calibration.props[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CalibrationExperimentConfig {
            radii: self.radii.clone(),
            props,
            camera_count: self.camera_count,
            frames: self.frames,
            pixel_sigma: self.pixel_sigma,
            trials: self.trials,
            master_seed,
            preset: self.preset,
            anchor: anchor.clone(),
            refine: self.refine,
        })
    }
}

/// Settings for `teleop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeleopSpec {
    /// Camera distances in front of the writer, meters.
    pub distances: Vec<f64>,
    pub preset: Preset,
    pub dropout: DropoutPolicy,
    pub scale: f64,
    pub ee_initial: [f64; 3],
    pub gains: ImpedanceParams,
    /// Hz.
    pub control_rate: f64,
    /// Seconds; the whole writing motion when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    pub trials: usize,
}

impl Default for TeleopSpec {
    fn default() -> Self {
        TeleopSpec {
            distances: vec![2.0, 6.0],
            preset: Preset::KinectV2,
            dropout: DropoutPolicy::Hold,
            scale: 1.0,
            ee_initial: [0.5, 0.0, 0.5],
            gains: ImpedanceParams::default(),
            control_rate: 1000.0,
            duration: None,
            trials: 1,
        }
    }
}

impl TeleopSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.distances.is_empty() || self.distances.iter().any(|d| !(*d > 0.0 && d.is_finite()))
        {
            return Err(invalid(
                "teleop.distances",
                "need at least one positive distance",
            ));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(invalid(
                "teleop.scale",
                format!("must be positive, got {}", self.scale),
            ));
        }
        if !(self.control_rate > 0.0 && self.control_rate.is_finite()) {
            return Err(invalid(
                "teleop.control_rate",
                format!("must be positive, got {}", self.control_rate),
            ));
        }
        if let Some(d) = self.duration {
            if !(d > 0.0 && d.is_finite()) {
                return Err(invalid(
                    "teleop.duration",
                    format!("must be positive, got {d}"),
                ));
            }
        }
        if self.trials < 1 {
            return Err(invalid("teleop.trials", "must be at least 1"));
        }
        self.gains
            .validate()
            .map_err(|e| invalid("teleop.gains", e))
    }
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn prop_by_name(name: &str, field: &str) -> Result<CalibrationProp, ConfigError> {
    CalibrationProp::by_name(name).ok_or_else(|| {
        invalid(
            field,
            format!("unknown prop `{name}` (expected checkerboard or cluster8)"),
        )
    })
}

fn finite(field: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(field, "values must be finite"))
    }
}

fn build_camera(spec: &CameraSpec, field: &str) -> Result<CameraModel, ConfigError> {
    if spec.id.trim().is_empty() {
        return Err(invalid(format!("{field}.id"), "must not be empty"));
    }
    let mut cam = match (spec.preset, spec.intrinsics) {
        (Some(p), None) => preset(p),
        (None, Some(i)) => {
            let intrinsics = CameraIntrinsics {
                fx: i.fx,
                fy: i.fy,
                cx: i.cx,
                cy: i.cy,
                width: i.width,
                height: i.height,
            };
            intrinsics
                .validate()
                .map_err(|e| invalid(format!("{field}.intrinsics"), e))?;
            CameraModel {
                id: String::new(),
                intrinsics,
                world_from_camera: RigidTransform::identity(),
                depth_noise: DepthNoiseModel::default(),
                pixel_noise_sigma: DEFAULT_PIXEL_NOISE,
            }
        }
        (Some(_), Some(_)) => {
            return Err(invalid(
                field,
                "give either `preset` or `intrinsics`, not both",
            ))
        }
        (None, None) => {
            return Err(invalid(
                field,
                "one of `preset` or `intrinsics` is required",
            ))
        }
    };
    finite(&format!("{field}.position"), &spec.position)?;
    finite(&format!("{field}.look_at"), &spec.look_at)?;
    let pose = look_at(&vec3(spec.position), &vec3(spec.look_at), &Vec3::z())
        .map_err(|e| invalid(format!("{field}.look_at"), e))?;
    cam = cam.with_pose(pose).with_id(spec.id.clone());
    if let Some(s) = spec.pixel_noise {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(invalid(
                format!("{field}.pixel_noise"),
                format!("must be non-negative, got {s}"),
            ));
        }
        cam.pixel_noise_sigma = s;
    }
    if let Some(d) = spec.depth_noise {
        if !(d.sigma0 >= 0.0
            && d.sigma1 >= 0.0
            && d.max_range > 0.0
            && finite("", &[d.sigma0, d.sigma1, d.max_range]).is_ok())
        {
            return Err(invalid(
                format!("{field}.depth_noise"),
                "sigmas must be non-negative and max_range positive",
            ));
        }
        cam.depth_noise = DepthNoiseModel {
            sigma0: d.sigma0,
            sigma1: d.sigma1,
            max_range: d.max_range,
        };
    }
    Ok(cam)
}

fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    };
    std::fs::canonicalize(&joined).unwrap_or(joined)
}

fn build_actor(spec: &ActorSpec, base_dir: &Path) -> Result<ActorConfig, ConfigError> {
    finite("actor.position", &spec.position)?;
    finite("actor.yaw_deg", &[spec.yaw_deg])?;
    let world_from_root = RigidTransform::new(
        Rotation::rot_z(spec.yaw_deg.to_radians()),
        vec3(spec.position),
    );
    let motion = match (spec.synth, &spec.bvh) {
        (Some(kind), None) => {
            if spec.map.is_some() || spec.unit_scale.is_some() {
                return Err(invalid(
                    "actor",
                    "`map` and `unit_scale` only apply to `bvh` motion",
                ));
            }
            ActorMotion::Synth(kind)
        }
        (None, Some(rel)) => {
            let path = resolve(base_dir, rel);
            let scale = spec.unit_scale.unwrap_or(DEFAULT_UNIT_SCALE);
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(invalid(
                    "actor.unit_scale",
                    format!("must be positive, got {scale}"),
                ));
            }
            let motion_err = |field: &str, path: &Path, reason: String| ConfigError::Motion {
                field: field.into(),
                path: path.to_path_buf(),
                reason,
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| motion_err("actor.bvh", &path, e.to_string()))?;
            let clip = parse_bvh_with_scale(&text, scale)
                .map_err(|e| motion_err("actor.bvh", &path, e.to_string()))?;
            let map = match &spec.map {
                Some(m) => {
                    let mp = resolve(base_dir, m);
                    let text = std::fs::read_to_string(&mp)
                        .map_err(|e| motion_err("actor.map", &mp, e.to_string()))?;
                    HarmonizationMap::from_toml(&text)
                        .map_err(|e| motion_err("actor.map", &mp, e.to_string()))?
                }
                None => HarmonizationMap::default_bvh(),
            };
            ActorMotion::Clip { path, clip, map }
        }
        (Some(_), Some(_)) => {
            return Err(invalid("actor", "give either `synth` or `bvh`, not both"))
        }
        (None, None) => return Err(invalid("actor", "one of `synth` or `bvh` is required")),
    };
    Ok(ActorConfig {
        motion,
        world_from_root,
    })
}

fn build_anchor(spec: &AnchorSpec) -> Result<WorldAnchor, ConfigError> {
    if !(spec.side > 0.0 && spec.side.is_finite()) {
        return Err(invalid(
            "anchor.side",
            format!("must be positive, got {}", spec.side),
        ));
    }
    finite("anchor.position", &spec.position)?;
    finite("anchor.tilt_deg", &[spec.tilt_deg])?;
    Ok(WorldAnchor {
        marker: CalibrationProp::square_marker("anchor", spec.side),
        world_from_marker: RigidTransform::new(
            Rotation::rot_y(spec.tilt_deg.to_radians()),
            vec3(spec.position),
        ),
    })
}

impl ConfigFile {
    /// Strict TOML parse; errors carry the dotted path of the offending key.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Syntax {
            path: "<document>".into(),
            message: e.to_string(),
        })?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().message().to_string();
            ConfigError::Syntax { path, message }
        })
    }

    /// Validates every section and builds the scene; relative motion paths
    /// resolve against `base_dir`.
    pub fn to_scene(&self, base_dir: &Path) -> Result<SceneConfig, ConfigError> {
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(invalid(
                "frame_rate",
                format!("must be positive, got {}", self.frame_rate),
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid(
                "duration",
                format!("must be positive, got {}", self.duration),
            ));
        }
        if self.cameras.is_empty() {
            return Err(invalid("cameras", "need at least one camera"));
        }
        let mut seen = BTreeSet::new();
        let mut cameras = Vec::with_capacity(self.cameras.len());
        for (i, spec) in self.cameras.iter().enumerate() {
            let field = format!("cameras[{i}]");
            if !seen.insert(spec.id.as_str()) {
                return Err(ConfigError::DuplicateCamera {
                    field: format!("{field}.id"),
                    id: spec.id.clone(),
                });
            }
            cameras.push(build_camera(spec, &field)?);
        }
        let mut scene = SceneConfig::new(cameras, build_actor(&self.actor, base_dir)?);
        scene.prop = prop_by_name(&self.prop, "prop")?;
        scene.anchor = build_anchor(&self.anchor.unwrap_or_default())?;
        scene.frame_rate = self.frame_rate;
        scene.duration = self.duration;
        scene.master_seed = self.seed;
        for (part, r) in &self.capsule_radii {
            if !(*r > 0.0 && r.is_finite()) {
                return Err(invalid(
                    format!("capsule_radii.{}", part_name(*part)),
                    format!("must be positive, got {r}"),
                ));
            }
            scene.capsule_radii.0.insert(*part, *r);
        }
        validate_detector(&self.detector)?;
        scene.detector = self.detector;
        scene.appearance = self.appearance.clone();
        if let Some(t) = &self.teleop {
            t.validate()?;
        }
        Ok(scene)
    }

    /// Copy with motion paths made absolute, suitable as a standalone snapshot.
    pub fn normalized(&self, base_dir: &Path) -> ConfigFile {
        let mut out = self.clone();
        out.actor.bvh = self.actor.bvh.as_ref().map(|p| resolve(base_dir, p));
        out.actor.map = self.actor.map.as_ref().map(|p| resolve(base_dir, p));
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn teleop_spec(&self) -> TeleopSpec {
        self.teleop.clone().unwrap_or_default()
    }

    pub fn calibration_spec(&self) -> CalibrationSpec {
        self.calibration.clone().unwrap_or_default()
    }
}

fn part_name(part: BodyPart) -> String {
    toml::Value::try_from(part)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| format!("{part:?}"))
}

fn validate_detector(d: &DetectorConfig) -> Result<(), ConfigError> {
    if !(d.pixel_sigma >= 0.0 && d.pixel_sigma.is_finite()) {
        return Err(invalid(
            "detector.pixel_sigma",
            format!("must be non-negative, got {}", d.pixel_sigma),
        ));
    }
    if !(0.0..=1.0).contains(&d.p_miss) {
        return Err(invalid(
            "detector.p_miss",
            format!("must lie in [0, 1], got {}", d.p_miss),
        ));
    }
    if !(0.0..=1.0).contains(&d.min_confidence) {
        return Err(invalid(
            "detector.min_confidence",
            format!("must lie in [0, 1], got {}", d.min_confidence),
        ));
    }
    Ok(())
}

/// Parses and validates a scene document.
pub fn parse_scene_config(text: &str, base_dir: &Path) -> Result<SceneConfig, ConfigError> {
    ConfigFile::parse(text)?.to_scene(base_dir)
}

/// A config file as loaded from disk, with any seed override applied.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    /// The document exactly as read.
    pub text: String,
    /// Normalized document (absolute paths, effective seed).
    pub file: ConfigFile,
    pub scene: SceneConfig,
}

pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<LoadedConfig, ConfigError> {
    let unreadable = |e: std::io::Error| ConfigError::Unreadable {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let text = std::fs::read_to_string(path).map_err(unreadable)?;
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let base_dir = std::fs::canonicalize(parent).map_err(unreadable)?;
    let mut file = ConfigFile::parse(&text)?.normalized(&base_dir);
    if let Some(seed) = seed_override {
        file.seed = seed;
    }
    let scene = file.to_scene(&base_dir)?;
    Ok(LoadedConfig { text, file, scene })
}

#[cfg(test)]
mod tests {
    use super::*;
    use humtrack_core::scene::CapsuleRadii;

    const MINIMAL: &str = r#"
seed = 42
duration = 1.0

[[cameras]]
id = "front"
preset = "kinect_v2"
position = [0.0, 3.0, 1.2]
look_at = [0.0, 0.0, 1.0]

[actor]
synth = "stand"
"#;

    fn here() -> &'static Path {
        Path::new(".")
    }

    #[test]
    fn minimal_document_fills_defaults() {
        let scene = parse_scene_config(MINIMAL, here()).unwrap();
        assert_eq!(scene.master_seed, 42);
        assert_eq!(scene.frame_rate, 30.0);
        assert_eq!(scene.frame_count(), 30);
        assert_eq!(scene.cameras.len(), 1);
        assert_eq!(scene.cameras[0].id, "front");
        assert_eq!(scene.cameras[0].intrinsics, Preset::KinectV2.intrinsics());
        assert_eq!(scene.prop, CalibrationProp::checkerboard());
        assert_eq!(scene.anchor, default_anchor());
        assert_eq!(scene.detector, DetectorConfig::default());
        assert_eq!(scene.capsule_radii, CapsuleRadii::default());
        assert_eq!(scene.actor, ActorConfig::synth(SynthKind::Stand));
    }

    #[test]
    fn duplicate_id_is_named() {
        let doc = MINIMAL.replace("[actor]", "[[cameras]]\nid = \"front\"\npreset = \"zed2\"\nposition = [3.0, 0.0, 1.2]\nlook_at = [0.0, 0.0, 1.0]\n\n[actor]");
        let err = parse_scene_config(&doc, here()).unwrap_err();
        assert_eq!(
            err,
            ConfigError::DuplicateCamera {
                field: "cameras[1].id".into(),
                id: "front".into()
            }
        );
        assert!(err.to_string().contains("`front`"));
    }

    #[test]
    fn rates_must_be_positive() {
        let err = parse_scene_config(
            &MINIMAL.replace("duration = 1.0", "duration = 1.0\nframe_rate = 0.0"),
            here(),
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("frame_rate:"), "{err}");
        let err = parse_scene_config(
            &MINIMAL.replace("duration = 1.0", "duration = -1.0"),
            here(),
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("duration:"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let err = parse_scene_config(
            &MINIMAL.replace("preset = \"kinect_v2\"", "preset = \"kinect_v2\"\nfov = 3"),
            here(),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("cameras[0]"), "{msg}");
        assert!(msg.contains("fov"), "{msg}");
        let err = parse_scene_config(
            &MINIMAL.replace("[actor]", "[detector]\npixel_sigmaa = 1.0\n\n[actor]"),
            here(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("detector"), "{err}");
    }

    #[test]
    fn missing_required_field() {
        let err = parse_scene_config(&MINIMAL.replace("duration = 1.0", ""), here()).unwrap_err();
        assert!(err.to_string().contains("duration"), "{err}");
    }

    #[test]
    fn camera_source_must_be_unambiguous() {
        let both = MINIMAL.replace(
            "preset = \"kinect_v2\"",
            "preset = \"kinect_v2\"\nintrinsics = { fx = 500.0, fy = 500.0, cx = 320.0, cy = 240.0, width = 640, height = 480 }",
        );
        assert!(parse_scene_config(&both, here())
            .unwrap_err()
            .to_string()
            .contains("not both"));
        let explicit = MINIMAL.replace(
            "preset = \"kinect_v2\"",
            "intrinsics = { fx = 500.0, fy = 500.0, cx = 320.0, cy = 240.0, width = 640, height = 480 }\npixel_noise = 0.0",
        );
        let scene = parse_scene_config(&explicit, here()).unwrap();
        assert_eq!(scene.cameras[0].intrinsics.fx, 500.0);
        assert_eq!(scene.cameras[0].pixel_noise_sigma, 0.0);
    }

    #[test]
    fn missing_motion_file() {
        let doc = MINIMAL.replace("synth = \"stand\"", "bvh = \"does_not_exist.bvh\"");
        assert!(matches!(
            parse_scene_config(&doc, here()),
            Err(ConfigError::Motion { .. })
        ));
    }

    #[test]
    fn snapshot_reparses_to_the_same_scene() {
        let doc = MINIMAL.replace(
            "[actor]\nsynth = \"stand\"",
            "[actor]\nsynth = \"wave_right_arm\"\nposition = [0.1, 0.2, 0.0]\nyaw_deg = 15.0\n\n[capsule_radii]\nhead = 0.12\n\n[anchor]\ntilt_deg = 20.0\n\n[teleop]\ndistances = [2.5]",
        );
        let file = ConfigFile::parse(&doc).unwrap();
        let scene = file.to_scene(here()).unwrap();
        let again = ConfigFile::parse(&file.to_toml()).unwrap();
        assert_eq!(again, file);
        assert_eq!(again.to_scene(here()).unwrap(), scene);
    }

    #[test]
    fn calibration_section_validates() {
        let spec = CalibrationSpec {
            radii: vec![],
            ..Default::default()
        };
        assert!(spec
            .experiment(0, &default_anchor())
            .unwrap_err()
            .to_string()
            .starts_with("calibration.radii"));
        let spec = CalibrationSpec {
            props: vec!["disc".into()],
            ..Default::default()
        };
        assert!(spec
            .experiment(0, &default_anchor())
            .unwrap_err()
            .to_string()
            .starts_with("calibration.props[0]"));
        let cfg = CalibrationSpec::default()
            .experiment(7, &default_anchor())
            .unwrap();
        assert_eq!(
            cfg,
            CalibrationExperimentConfig {
                master_seed: 7,
                ..Default::default()
            }
        );
    }
}
