//! Pinhole RGB-D camera models and device presets.
//!
//! No lens distortion. Preset intrinsics are derived from each device's
//! nominal depth-stream resolution and field of view:
//!
//! | preset           | width | height | HFoV (deg) | VFoV (deg) |
//! |------------------|-------|--------|------------|------------|
//! | `kinect_v2`      | 512   | 424    | 70.6       | 60.0       |
//! | `realsense_d435` | 848   | 480    | 87.0       | 58.0       |
//! | `zed2`           | 1280  | 720    | 110.0      | 70.0       |
//!
//! All presets share the default depth noise `sigma(z) = 0.002 + 0.0005 z^2`
//! with an 8 m range cutoff and 1 px detector noise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{invert, transform_point, RigidTransform, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraError {
    #[error("unknown camera preset `{0}` (expected kinect_v2, realsense_d435 or zed2)")]
    UnknownPreset(String),
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(CameraError::InvalidIntrinsics(
                "focal lengths must be positive",
            ));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64) {
            return Err(CameraError::InvalidIntrinsics(
                "cx must lie inside the image",
            ));
        }
        if !(self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(CameraError::InvalidIntrinsics(
                "cy must lie inside the image",
            ));
        }
        Ok(())
    }

    /// Horizontal field of view in degrees.
    pub fn hfov_deg(&self) -> f64 {
        2.0 * (self.width as f64 / (2.0 * self.fx)).atan().to_degrees()
    }

    pub fn vfov_deg(&self) -> f64 {
        2.0 * (self.height as f64 / (2.0 * self.fy)).atan().to_degrees()
    }

    /// Camera-frame point to pixel; `None` when `z <= 0`.
    pub fn project_camera(&self, p: &Vec3) -> Option<ImagePoint> {
        if p.z <= 0.0 {
            return None;
        }
        Some(ImagePoint {
            u: self.fx * p.x / p.z + self.cx,
            v: self.fy * p.y / p.z + self.cy,
            depth: p.z,
        })
    }

    /// Camera-frame point at depth `z` on the ray through `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx * z, (v - self.cy) / self.fy * z, z)
    }
}

/// Quadratic depth noise `sigma(z) = sigma0 + sigma1 z^2` with range cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthNoiseModel {
    pub sigma0: f64,
    pub sigma1: f64,
    pub max_range: f64,
}

impl Default for DepthNoiseModel {
    fn default() -> Self {
        DepthNoiseModel {
            sigma0: 0.002,
            sigma1: 0.0005,
            max_range: 8.0,
        }
    }
}

impl DepthNoiseModel {
    pub fn noiseless(max_range: f64) -> Self {
        DepthNoiseModel {
            sigma0: 0.0,
            sigma1: 0.0,
            max_range,
        }
    }

    pub fn sigma(&self, z: f64) -> f64 {
        self.sigma0 + self.sigma1 * z * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    /// Camera-frame depth, meters.
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub id: String,
    pub intrinsics: CameraIntrinsics,
    pub world_from_camera: RigidTransform,
    pub depth_noise: DepthNoiseModel,
    /// Pixels.
    pub pixel_noise_sigma: f64,
}

impl CameraModel {
    pub fn center(&self) -> Vec3 {
        self.world_from_camera.translation
    }

    pub fn with_pose(mut self, world_from_camera: RigidTransform) -> Self {
        self.world_from_camera = world_from_camera;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// World point to pixel plus depth; `None` when behind the camera.
///
/// No clipping to the image; use [`in_image`] for that.
pub fn project(cam: &CameraModel, p_world: &Vec3) -> Option<ImagePoint> {
    let p_cam = transform_point(&invert(&cam.world_from_camera), p_world);
    cam.intrinsics.project_camera(&p_cam)
}

pub fn back_project(cam: &CameraModel, u: f64, v: f64, z: f64) -> Result<Vec3, CameraError> {
    if !(z > 0.0) {
        return Err(CameraError::NonPositiveDepth(z));
    }
    Ok(transform_point(
        &cam.world_from_camera,
        &cam.intrinsics.unproject(u, v, z),
    ))
}

pub fn in_image(intr: &CameraIntrinsics, u: f64, v: f64) -> bool {
    u >= 0.0 && u < intr.width as f64 && v >= 0.0 && v < intr.height as f64
}

/// Noisy depth reading; `None` is a dropout (beyond range).
pub fn apply_depth_noise<R: Rng + ?Sized>(
    model: &DepthNoiseModel,
    z: f64,
    rng: &mut R,
) -> Option<f64> {
    if z > model.max_range {
        return None;
    }
    let n: f64 = rng.sample(StandardNormal);
    Some((z + model.sigma(z) * n).max(MIN_DEPTH))
}

const MIN_DEPTH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    KinectV2,
    RealsenseD435,
    Zed2,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::KinectV2, Preset::RealsenseD435, Preset::Zed2];

    pub fn name(self) -> &'static str {
        match self {
            Preset::KinectV2 => "kinect_v2",
            Preset::RealsenseD435 => "realsense_d435",
            Preset::Zed2 => "zed2",
        }
    }

    /// `(width, height, hfov_deg, vfov_deg)` of the depth stream.
    pub fn nominal(self) -> (u32, u32, f64, f64) {
        match self {
            Preset::KinectV2 => (512, 424, 70.6, 60.0),
            Preset::RealsenseD435 => (848, 480, 87.0, 58.0),
            Preset::Zed2 => (1280, 720, 110.0, 70.0),
        }
    }

    pub fn intrinsics(self) -> CameraIntrinsics {
        let (width, height, hfov, vfov) = self.nominal();
        let (w, h) = (width as f64, height as f64);
        CameraIntrinsics {
            fx: w / 2.0 / (hfov.to_radians() / 2.0).tan(),
            fy: h / 2.0 / (vfov.to_radians() / 2.0).tan(),
            cx: w / 2.0,
            cy: h / 2.0,
            width,
            height,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = CameraError;
    fn from_str(s: &str) -> Result<Self, CameraError> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CameraError::UnknownPreset(s.to_string()))
    }
}

pub const DEFAULT_PIXEL_NOISE: f64 = 1.0;

/// Camera with the preset's intrinsics, default noise and identity pose.
pub fn preset(name: Preset) -> CameraModel {
    CameraModel {
        id: name.name().to_string(),
        intrinsics: name.intrinsics(),
        world_from_camera: RigidTransform::identity(),
        depth_noise: DepthNoiseModel::default(),
        pixel_noise_sigma: DEFAULT_PIXEL_NOISE,
    }
}

pub fn preset_by_name(name: &str) -> Result<CameraModel, CameraError> {
    Ok(preset(name.parse()?))
}

/// Plain-text preset table (one row per preset).
pub fn preset_table() -> String {
    let mut out = String::from("name,width,height,fx,fy,cx,cy,sigma0,sigma1,max_range\n");
    for p in Preset::ALL {
        let cam = preset(p);
        let i = cam.intrinsics;
        let n = cam.depth_noise;
        out.push_str(&format!(
            "{},{},{},{:.3},{:.3},{:.1},{:.1},{},{},{}\n",
            p.name(),
            i.width,
            i.height,
            i.fx,
            i.fy,
            i.cx,
            i.cy,
            n.sigma0,
            n.sigma1,
            n.max_range
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn test_camera() -> CameraModel {
        CameraModel {
            id: "test".into(),
            intrinsics: CameraIntrinsics {
                fx: 500.0,
                fy: 500.0,
                cx: 320.0,
                cy: 240.0,
                width: 640,
                height: 480,
            },
            world_from_camera: RigidTransform::identity(),
            depth_noise: DepthNoiseModel::noiseless(8.0),
            pixel_noise_sigma: 0.0,
        }
    }

    #[test]
    fn projection_examples() {
        let cam = test_camera();
        let p = project(&cam, &Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!((p.u, p.v, p.depth), (320.0, 240.0, 2.0));
        let p = project(&cam, &Vec3::new(0.5, 0.0, 2.0)).unwrap();
        assert_eq!(p.u, 445.0);
        assert!(project(&cam, &Vec3::new(0.0, 0.0, -1.0)).is_none());
    }

    #[test]
    fn back_projection_examples() {
        let cam = test_camera();
        assert_eq!(
            back_project(&cam, 445.0, 240.0, 2.0).unwrap(),
            Vec3::new(0.5, 0.0, 2.0)
        );
        assert_eq!(
            back_project(&cam, 320.0, 240.0, 3.0).unwrap(),
            Vec3::new(0.0, 0.0, 3.0)
        );
        assert_eq!(
            back_project(&cam, 1.0, 1.0, 0.0),
            Err(CameraError::NonPositiveDepth(0.0))
        );
    }

    #[test]
    fn in_image_bounds() {
        let i = test_camera().intrinsics;
        assert!(in_image(&i, 0.0, 0.0));
        assert!(!in_image(&i, 640.0, 0.0));
        assert!(in_image(&i, i.cx, i.cy));
        assert!(!in_image(&i, -0.1, 5.0));
    }

    #[test]
    fn depth_noise_behaviour() {
        let mut rng = stream(1, "depth", &[]);
        assert_eq!(
            apply_depth_noise(&DepthNoiseModel::noiseless(8.0), 3.0, &mut rng),
            Some(3.0)
        );
        assert_eq!(
            apply_depth_noise(&DepthNoiseModel::default(), 8.5, &mut rng),
            None
        );

        let a =
            apply_depth_noise(&DepthNoiseModel::default(), 3.0, &mut stream(5, "d", &[])).unwrap();
        let b =
            apply_depth_noise(&DepthNoiseModel::default(), 3.0, &mut stream(5, "d", &[])).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn depth_noise_statistics() {
        // sigma(3) = 0.002 + 0.0005 * 9 = 0.0065
        let model = DepthNoiseModel {
            sigma0: 0.002,
            sigma1: 0.0005,
            max_range: 8.0,
        };
        let mut rng = stream(99, "depth-stats", &[]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| apply_depth_noise(&model, 3.0, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() / 0.0065 - 1.0).abs() < 0.05);
    }

    #[test]
    fn presets_are_valid_and_pure() {
        for p in Preset::ALL {
            let cam = preset(p);
            cam.intrinsics.validate().unwrap();
            assert_eq!(cam, preset(p));
            let (_, _, hfov, vfov) = p.nominal();
            assert!((cam.intrinsics.hfov_deg() - hfov).abs() < 0.5);
            assert!((cam.intrinsics.vfov_deg() - vfov).abs() < 0.5);
        }
        assert!(matches!(
            preset_by_name("webcam"),
            Err(CameraError::UnknownPreset(_))
        ));
        assert_eq!(preset_table().lines().count(), 4);
    }
}
