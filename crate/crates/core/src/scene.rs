//! Geometric world model: body capsules, calibration props, the world anchor
//! marker, ray-cast visibility and synthetic depth.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{apply_depth_noise, in_image, project, CameraModel};
use crate::geometry::{transform_point, RigidTransform, Vec3};
use crate::motion::synth::{self, SynthKind};
use crate::motion::{sample_pose, BvhClip, HarmonizationMap, Joint, SkeletonPose};
use crate::tracking::DetectorConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("ray direction must be unit length (norm {0})")]
    NonUnitDirection(f64),
    #[error("pixel ({u}, {v}) lies outside the image")]
    PixelOutOfImage { u: f64, v: f64 },
    #[error("invalid prop `{name}`: {reason}")]
    InvalidProp { name: String, reason: &'static str },
}

/// Swept sphere around the segment `a`-`b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Capsule {
    pub endpoint_a: Vec3,
    pub endpoint_b: Vec3,
    pub radius: f64,
    pub owner_joints: Vec<Joint>,
}

impl Capsule {
    pub fn owns(&self, joint: Joint) -> bool {
        self.owner_joints.contains(&joint)
    }

    /// Distance from `p` to the axis segment.
    pub fn axis_distance(&self, p: &Vec3) -> f64 {
        let ab = self.endpoint_b - self.endpoint_a;
        let len2 = ab.norm_squared();
        let s = if len2 > 0.0 {
            ((p - self.endpoint_a).dot(&ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (p - (self.endpoint_a + ab * s)).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    Head,
    Torso,
    Pelvis,
    UpperArm,
    Forearm,
    Thigh,
    Shin,
    Foot,
}

/// Capsule radius per body part, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CapsuleRadii(pub BTreeMap<BodyPart, f64>);

impl Default for CapsuleRadii {
    fn default() -> Self {
        use BodyPart::*;
        CapsuleRadii(BTreeMap::from([
            (Head, 0.11),
            (Torso, 0.15),
            (Pelvis, 0.09),
            (UpperArm, 0.05),
            (Forearm, 0.045),
            (Thigh, 0.08),
            (Shin, 0.06),
            (Foot, 0.04),
        ]))
    }
}

impl CapsuleRadii {
    pub fn get(&self, part: BodyPart) -> Option<f64> {
        self.0.get(&part).copied()
    }
}

pub struct Bone {
    pub part: BodyPart,
    pub a: Joint,
    pub b: Joint,
    /// Joints that sit inside or on this capsule and are never occluded by it.
    pub owners: &'static [Joint],
}

/// Configured bone table.
pub const BONES: [Bone; 13] = {
    use BodyPart::*;
    use Joint::*;
    [
        Bone {
            part: Head,
            a: Neck,
            b: Nose,
            owners: &[Neck, Nose, REye, LEye, REar, LEar],
        },
        Bone {
            part: Torso,
            a: Neck,
            b: MidHip,
            owners: &[Neck, MidHip, RHip, LHip],
        },
        Bone {
            part: Pelvis,
            a: RHip,
            b: LHip,
            owners: &[RHip, LHip, MidHip],
        },
        Bone {
            part: UpperArm,
            a: RShoulder,
            b: RElbow,
            owners: &[RShoulder, RElbow],
        },
        Bone {
            part: UpperArm,
            a: LShoulder,
            b: LElbow,
            owners: &[LShoulder, LElbow],
        },
        Bone {
            part: Forearm,
            a: RElbow,
            b: RWrist,
            owners: &[RElbow, RWrist, RHand, RThumb],
        },
        Bone {
            part: Forearm,
            a: LElbow,
            b: LWrist,
            owners: &[LElbow, LWrist, LHand, LThumb],
        },
        Bone {
            part: Thigh,
            a: RHip,
            b: RKnee,
            owners: &[RHip, RKnee],
        },
        Bone {
            part: Thigh,
            a: LHip,
            b: LKnee,
            owners: &[LHip, LKnee],
        },
        Bone {
            part: Shin,
            a: RKnee,
            b: RAnkle,
            owners: &[RKnee, RAnkle, RHeel],
        },
        Bone {
            part: Shin,
            a: LKnee,
            b: LAnkle,
            owners: &[LKnee, LAnkle, LHeel],
        },
        Bone {
            part: Foot,
            a: RAnkle,
            b: RBigToe,
            owners: &[RAnkle, RBigToe, RSmallToe, RHeel],
        },
        Bone {
            part: Foot,
            a: LAnkle,
            b: LBigToe,
            owners: &[LAnkle, LBigToe, LSmallToe, LHeel],
        },
    ]
};

/// One capsule per configured bone whose endpoints are both present.
pub fn build_capsules(pose: &SkeletonPose, radii: &CapsuleRadii) -> Vec<Capsule> {
    BONES
        .iter()
        .filter_map(|bone| {
            let radius = radii.get(bone.part)?;
            Some(Capsule {
                endpoint_a: pose.get(bone.a)?,
                endpoint_b: pose.get(bone.b)?,
                radius,
                owner_joints: bone.owners.to_vec(),
            })
        })
        .collect()
}

/// Self-occlusion margin: half the largest radius among capsules owning `joint`.
pub fn default_margin(joint: Joint, capsules: &[Capsule]) -> f64 {
    0.5 * capsules
        .iter()
        .filter(|c| c.owns(joint))
        .map(|c| c.radius)
        .fold(0.0, f64::max)
}

type Interval = Option<(f64, f64)>;

fn sphere_interval(origin: &Vec3, dir: &Vec3, center: &Vec3, r: f64) -> Interval {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.norm_squared() - r * r;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

fn cylinder_interval(origin: &Vec3, dir: &Vec3, c: &Capsule) -> Interval {
    let axis = c.endpoint_b - c.endpoint_a;
    let len = axis.norm();
    if len < 1e-12 {
        return None;
    }
    let w = axis / len;
    let oa = origin - c.endpoint_a;
    // Slab between the end caps.
    let dw = dir.dot(&w);
    let ow = oa.dot(&w);
    let (mut lo, mut hi) = if dw.abs() < 1e-15 {
        if ow < 0.0 || ow > len {
            return None;
        }
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        let t0 = -ow / dw;
        let t1 = (len - ow) / dw;
        (t0.min(t1), t0.max(t1))
    };
    // Infinite cylinder.
    let d_perp = dir - w * dw;
    let o_perp = oa - w * ow;
    let a = d_perp.norm_squared();
    let cc = o_perp.norm_squared() - c.radius * c.radius;
    if a < 1e-24 {
        if cc > 0.0 {
            return None;
        }
    } else {
        let b = o_perp.dot(&d_perp);
        let disc = b * b - a * cc;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        lo = lo.max((-b - s) / a);
        hi = hi.min((-b + s) / a);
    }
    (lo <= hi).then_some((lo, hi))
}

fn union(a: Interval, b: Interval) -> Interval {
    match (a, b) {
        (Some(x), Some(y)) => Some((x.0.min(y.0), x.1.max(y.1))),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Nearest `t >= 0` where the ray meets the capsule surface, or `None` on a miss.
///
/// From inside the capsule this is the exit distance.
pub fn ray_capsule(origin: &Vec3, dir: &Vec3, c: &Capsule) -> Result<Option<f64>, SceneError> {
    let n = dir.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(SceneError::NonUnitDirection(n));
    }
    Ok(ray_capsule_unchecked(origin, dir, c))
}

fn ray_capsule_unchecked(origin: &Vec3, dir: &Vec3, c: &Capsule) -> Option<f64> {
    // The capsule is convex, so the union of the pieces' intervals is one interval.
    let interval = union(
        union(
            sphere_interval(origin, dir, &c.endpoint_a, c.radius),
            sphere_interval(origin, dir, &c.endpoint_b, c.radius),
        ),
        cylinder_interval(origin, dir, c),
    );
    let (t_in, t_out) = interval?;
    if t_out < 0.0 {
        None
    } else if t_in >= 0.0 {
        Some(t_in)
    } else {
        Some(t_out)
    }
}

/// Nearest hit over all capsules, skipping those owning `exclude`.
pub fn cast_ray(
    origin: &Vec3,
    dir: &Vec3,
    capsules: &[Capsule],
    exclude: Option<Joint>,
) -> Option<f64> {
    capsules
        .iter()
        .filter(|c| exclude.is_none_or(|j| !c.owns(j)))
        .filter_map(|c| ray_capsule_unchecked(origin, dir, c))
        .fold(None, |best: Option<f64>, t| {
            Some(best.map_or(t, |b| b.min(t)))
        })
}

/// In view and not blocked by any capsule that does not own `exclude`.
pub fn joint_visible(
    cam: &CameraModel,
    joint: &Vec3,
    capsules: &[Capsule],
    exclude: Option<Joint>,
    margin: f64,
) -> bool {
    let Some(ip) = project(cam, joint) else {
        return false;
    };
    if !in_image(&cam.intrinsics, ip.u, ip.v) {
        return false;
    }
    let origin = cam.center();
    let to_joint = joint - origin;
    let dist = to_joint.norm();
    let dir = to_joint / dist;
    match cast_ray(&origin, &dir, capsules, exclude) {
        Some(t) => t >= dist - margin,
        None => true,
    }
}

/// World-frame unit ray through pixel `(u, v)` and its cosine with the optical axis.
pub fn pixel_ray(cam: &CameraModel, u: f64, v: f64) -> (Vec3, f64) {
    let d_cam = cam.intrinsics.unproject(u, v, 1.0);
    let norm = d_cam.norm();
    (
        cam.world_from_camera.rotation.rotate(&(d_cam / norm)),
        1.0 / norm,
    )
}

/// Noisy depth (along the optical axis) of the first capsule hit through the
/// pixel; `Ok(None)` when nothing is hit in range.
pub fn depth_at_pixel<R: Rng + ?Sized>(
    cam: &CameraModel,
    u: f64,
    v: f64,
    capsules: &[Capsule],
    rng: &mut R,
) -> Result<Option<f64>, SceneError> {
    if !in_image(&cam.intrinsics, u, v) {
        return Err(SceneError::PixelOutOfImage { u, v });
    }
    let (dir, cos) = pixel_ray(cam, u, v);
    let Some(t) = cast_ray(&cam.center(), &dir, capsules, None) else {
        return Ok(None);
    };
    Ok(apply_depth_noise(&cam.depth_noise, t * cos, rng))
}

/// Full depth raster, row-major, `None` for no return.
pub fn render_depth<R: Rng + ?Sized>(
    cam: &CameraModel,
    capsules: &[Capsule],
    rng: &mut R,
) -> Vec<Option<f64>> {
    let (w, h) = (cam.intrinsics.width, cam.intrinsics.height);
    let mut out = Vec::with_capacity((w * h) as usize);
    for v in 0..h {
        for u in 0..w {
            let d = depth_at_pixel(cam, u as f64 + 0.5, v as f64 + 0.5, capsules, rng)
                .expect("pixel in image");
            out.push(d);
        }
    }
    out
}

pub const CHECKERBOARD_SIDE: f64 = 0.5;
pub const CHECKERBOARD_CORNERS: usize = 5;

/// Rigid pattern of fiducial points in its own frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProp {
    pub name: String,
    pub fiducial_points: Vec<Vec3>,
    pub planar: bool,
}

impl CalibrationProp {
    /// Planar board, 0.5 m square, with a 5x5 grid of corner fiducials facing local +Z.
    pub fn checkerboard() -> Self {
        let n = CHECKERBOARD_CORNERS;
        let step = CHECKERBOARD_SIDE / (n - 1) as f64;
        let h = CHECKERBOARD_SIDE / 2.0;
        let fiducial_points = (0..n)
            .flat_map(|i| {
                (0..n).map(move |j| Vec3::new(i as f64 * step - h, j as f64 * step - h, 0.0))
            })
            .collect();
        CalibrationProp {
            name: "checkerboard".into(),
            fiducial_points,
            planar: true,
        }
    }

    /// Asymmetric eight-point cluster inside a 0.4 m cube.
    pub fn cluster8() -> Self {
        let pts = [
            [-0.20, -0.15, 0.00],
            [0.20, -0.20, 0.05],
            [0.15, 0.20, -0.10],
            [-0.10, 0.18, 0.20],
            [0.00, 0.00, -0.20],
            [0.05, -0.05, 0.15],
            [-0.18, 0.05, -0.12],
            [0.12, 0.10, 0.18],
        ];
        CalibrationProp {
            name: "cluster8".into(),
            fiducial_points: pts.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(),
            planar: false,
        }
    }

    /// Square marker with its four corners as fiducials, facing local +Z.
    pub fn square_marker(name: &str, side: f64) -> Self {
        let h = side / 2.0;
        CalibrationProp {
            name: name.into(),
            fiducial_points: vec![
                Vec3::new(-h, -h, 0.0),
                Vec3::new(h, -h, 0.0),
                Vec3::new(h, h, 0.0),
                Vec3::new(-h, h, 0.0),
            ],
            planar: true,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "checkerboard" => Some(Self::checkerboard()),
            "cluster8" => Some(Self::cluster8()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let invalid = |reason| SceneError::InvalidProp {
            name: self.name.clone(),
            reason,
        };
        let pts = &self.fiducial_points;
        if pts.len() < 4 {
            return Err(invalid("needs at least 4 fiducials"));
        }
        if pts.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(invalid("fiducials must be finite"));
        }
        let (centroid, normal, spread) = plane_fit(pts);
        if spread[1] < 1e-9 {
            return Err(invalid("fiducials are collinear"));
        }
        if self.planar && pts.iter().any(|p| (p - centroid).dot(&normal).abs() > 1e-9) {
            return Err(invalid("planar prop fiducials are not coplanar"));
        }
        Ok(())
    }

    /// Outward normal in the prop frame (planar props face local +Z by convention
    /// when their points lie in an XY plane).
    pub fn normal(&self) -> Vec3 {
        let (_, n, _) = plane_fit(&self.fiducial_points);
        if n.z < 0.0 {
            -n
        } else {
            n
        }
    }
}

/// Centroid, unit normal (least-spread direction) and singular values.
pub(crate) fn plane_fit(pts: &[Vec3]) -> (Vec3, Vec3, [f64; 3]) {
    let centroid = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let mut m = nalgebra::Matrix3::zeros();
    for p in pts {
        let d = p - centroid;
        m += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let normal = eig.eigenvectors.column(idx[2]).into_owned();
    let spread = idx.map(|i| eig.eigenvalues[i].max(0.0).sqrt());
    (centroid, normal, spread)
}

/// Marker fixed at a known world pose.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldAnchor {
    pub marker: CalibrationProp,
    pub world_from_marker: RigidTransform,
}

impl WorldAnchor {
    pub fn world_points(&self) -> Vec<Vec3> {
        self.marker
            .fiducial_points
            .iter()
            .map(|p| transform_point(&self.world_from_marker, p))
            .collect()
    }
}

/// What drives the actor's skeleton.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ActorMotion {
    Synth(SynthKind),
    Clip {
        path: PathBuf,
        clip: BvhClip,
        map: HarmonizationMap,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorConfig {
    pub motion: ActorMotion,
    pub world_from_root: RigidTransform,
}

impl ActorConfig {
    pub fn synth(kind: SynthKind) -> Self {
        ActorConfig {
            motion: ActorMotion::Synth(kind),
            world_from_root: RigidTransform::identity(),
        }
    }

    /// World-frame pose at `t`; clips hold their last frame past the end.
    pub fn pose_at(&self, t: f64) -> SkeletonPose {
        match &self.motion {
            ActorMotion::Synth(kind) => synth::pose_at(*kind, t, &self.world_from_root),
            ActorMotion::Clip { clip, map, .. } => {
                let tc = t.clamp(0.0, clip.duration());
                let mut pose = sample_pose(clip, tc, &self.world_from_root, map)
                    .expect("time clamped to clip");
                pose.timestamp = t;
                pose
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub cameras: Vec<CameraModel>,
    pub actor: ActorConfig,
    pub prop: CalibrationProp,
    pub anchor: WorldAnchor,
    /// Hz.
    pub frame_rate: f64,
    /// Seconds.
    pub duration: f64,
    pub master_seed: u64,
    pub capsule_radii: CapsuleRadii,
    pub detector: DetectorConfig,
    /// Opaque appearance labels copied into dataset records.
    pub appearance: BTreeMap<String, String>,
}

impl SceneConfig {
    /// Scene with the default prop, anchor and capsules: 10 s at 30 Hz, seed 0.
    pub fn new(cameras: Vec<CameraModel>, actor: ActorConfig) -> Self {
        SceneConfig {
            cameras,
            actor,
            prop: CalibrationProp::checkerboard(),
            anchor: crate::calibration::default_anchor(),
            frame_rate: 30.0,
            duration: 10.0,
            master_seed: 0,
            capsule_radii: CapsuleRadii::default(),
            detector: DetectorConfig::default(),
            appearance: BTreeMap::new(),
        }
    }

    pub fn frame_count(&self) -> usize {
        synth::sample_count(self.duration, self.frame_rate)
    }

    pub fn frame_time(&self, frame: usize) -> f64 {
        frame as f64 / self.frame_rate
    }

    pub fn camera(&self, id: &str) -> Option<&CameraModel> {
        self.cameras.iter().find(|c| c.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraIntrinsics, DepthNoiseModel};
    use crate::geometry::look_at;
    use crate::motion::synth::standing_pose;
    use crate::rng::stream;

    fn sphere(center: Vec3, r: f64) -> Capsule {
        Capsule {
            endpoint_a: center,
            endpoint_b: center,
            radius: r,
            owner_joints: vec![],
        }
    }

    fn camera_at(eye: Vec3, target: Vec3) -> CameraModel {
        CameraModel {
            id: "c".into(),
            intrinsics: CameraIntrinsics {
                fx: 500.0,
                fy: 500.0,
                cx: 320.0,
                cy: 240.0,
                width: 640,
                height: 480,
            },
            world_from_camera: look_at(&eye, &target, &Vec3::z()).unwrap(),
            depth_noise: DepthNoiseModel::noiseless(8.0),
            pixel_noise_sigma: 0.0,
        }
    }

    #[test]
    fn capsule_counts() {
        let caps = build_capsules(&standing_pose(), &CapsuleRadii::default());
        assert_eq!(caps.len(), 13);
        let pose = standing_pose();
        let torso = &caps[1];
        assert_eq!(torso.endpoint_a, pose.get(Joint::Neck).unwrap());
        assert_eq!(torso.endpoint_b, pose.get(Joint::MidHip).unwrap());
        assert!(build_capsules(&SkeletonPose::empty(0.0), &CapsuleRadii::default()).is_empty());
    }

    #[test]
    fn ray_hits_sphere_front() {
        let c = sphere(Vec3::new(0.0, 0.0, 3.0), 0.2);
        let t = ray_capsule(&Vec3::zeros(), &Vec3::z(), &c)
            .unwrap()
            .unwrap();
        assert!((t - 2.8).abs() < 1e-12);
    }

    #[test]
    fn parallel_ray_clears_capsule() {
        let r = 0.1;
        let c = Capsule {
            endpoint_a: Vec3::new(0.0, 0.0, 1.0),
            endpoint_b: Vec3::new(0.0, 0.0, 2.0),
            radius: r,
            owner_joints: vec![],
        };
        let hit = ray_capsule(&Vec3::new(2.0 * r, 0.0, 0.0), &Vec3::z(), &c).unwrap();
        assert_eq!(hit, None);
    }

    #[test]
    fn interior_origin_returns_exit() {
        let c = Capsule {
            endpoint_a: Vec3::new(-1.0, 0.0, 0.0),
            endpoint_b: Vec3::new(1.0, 0.0, 0.0),
            radius: 0.5,
            owner_joints: vec![],
        };
        let t = ray_capsule(&Vec3::zeros(), &Vec3::y(), &c)
            .unwrap()
            .unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        let t = ray_capsule(&Vec3::zeros(), &Vec3::x(), &c)
            .unwrap()
            .unwrap();
        assert!((t - 1.5).abs() < 1e-12);
    }

    #[test]
    fn ray_requires_unit_direction() {
        let c = sphere(Vec3::zeros(), 1.0);
        assert!(matches!(
            ray_capsule(&Vec3::zeros(), &Vec3::new(2.0, 0.0, 0.0), &c),
            Err(SceneError::NonUnitDirection(_))
        ));
    }

    #[test]
    fn visibility_cases() {
        let cam = camera_at(Vec3::zeros(), Vec3::new(0.0, 4.0, 0.0));
        let joint = Vec3::new(0.0, 4.0, 0.0);
        assert!(joint_visible(&cam, &joint, &[], None, 0.0));

        let torso = Capsule {
            endpoint_a: Vec3::new(0.0, 2.0, -0.3),
            endpoint_b: Vec3::new(0.0, 2.0, 0.3),
            radius: 0.15,
            owner_joints: vec![Joint::MidHip],
        };
        assert!(!joint_visible(
            &cam,
            &joint,
            std::slice::from_ref(&torso),
            Some(Joint::Nose),
            0.05
        ));
        // Owned capsules never occlude their joints.
        assert!(joint_visible(
            &cam,
            &joint,
            std::slice::from_ref(&torso),
            Some(Joint::MidHip),
            0.05
        ));
        assert!(!joint_visible(
            &cam,
            &Vec3::new(0.0, -4.0, 0.0),
            &[],
            None,
            0.0
        ));
    }

    #[test]
    fn depth_cases() {
        let cam = camera_at(Vec3::zeros(), Vec3::new(0.0, 3.0, 0.0));
        let caps = vec![sphere(Vec3::new(0.0, 3.0, 0.0), 0.2)];
        let mut rng = stream(0, "d", &[]);
        let z = depth_at_pixel(&cam, 320.0, 240.0, &caps, &mut rng)
            .unwrap()
            .unwrap();
        assert!((z - 2.8).abs() < 1e-12);
        assert_eq!(
            depth_at_pixel(&cam, 5.0, 5.0, &caps, &mut rng).unwrap(),
            None
        );
        assert!(matches!(
            depth_at_pixel(&cam, 640.0, 5.0, &caps, &mut rng),
            Err(SceneError::PixelOutOfImage { .. })
        ));
    }

    #[test]
    fn props_validate() {
        CalibrationProp::checkerboard().validate().unwrap();
        CalibrationProp::cluster8().validate().unwrap();
        assert_eq!(CalibrationProp::checkerboard().normal(), Vec3::z());
        let mut bad = CalibrationProp::checkerboard();
        bad.fiducial_points[0].z = 0.01;
        assert!(bad.validate().is_err());
        let line = CalibrationProp {
            name: "line".into(),
            fiducial_points: (0..4).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect(),
            planar: false,
        };
        assert!(line.validate().is_err());
    }
}
