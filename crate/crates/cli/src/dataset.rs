//! Annotated dataset export: one JSON record per frame.

use std::collections::BTreeMap;

use humtrack_core::camera::CameraModel;
use humtrack_core::geometry::{invert, transform_point, RigidTransform, Vec3};
use humtrack_core::motion::Joint;
use humtrack_core::rng::stream;
use humtrack_core::scene::{build_capsules, render_depth, SceneConfig};
use humtrack_core::tracking::{run_tracking_experiment, TrackingError, TrackingFrame};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::RunRecorder;
use crate::output::OutputError;

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const SNAPSHOT_FILE: &str = "scene.toml";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicsRecord {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub translation: [f64; 3],
    /// Unit quaternion, scalar first.
    pub rotation_wxyz: [f64; 4],
}

impl From<&RigidTransform> for PoseRecord {
    fn from(t: &RigidTransform) -> Self {
        PoseRecord {
            translation: [t.translation.x, t.translation.y, t.translation.z],
            rotation_wxyz: t.rotation.wxyz(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointRecord {
    pub joint: String,
    pub u: f64,
    pub v: f64,
    pub confidence: f64,
}

/// Sensor depth along the optical axis at a keypoint pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSample {
    pub joint: String,
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub camera_id: String,
    pub intrinsics: IntrinsicsRecord,
    pub world_from_camera: PoseRecord,
    /// Detected joints only.
    pub keypoints: Vec<KeypointRecord>,
    pub depth_samples: Vec<DepthSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPosition {
    pub joint: String,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub frame_id: usize,
    /// Seconds.
    pub timestamp: f64,
    pub cameras: Vec<CameraRecord>,
    /// World-frame joint positions present in this frame.
    pub ground_truth: Vec<JointPosition>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub appearance: BTreeMap<String, String>,
}

fn arr(p: Vec3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

fn camera_record(cam: &CameraModel, frame: &TrackingFrame, ci: usize) -> CameraRecord {
    let det = &frame.detections[ci];
    let est = &frame.estimates[ci];
    let camera_from_world = invert(&cam.world_from_camera);
    let mut keypoints = Vec::new();
    let mut depth_samples = Vec::new();
    for &j in Joint::ALL {
        let Some(kp) = det.joints[j.index()] else {
            continue;
        };
        keypoints.push(KeypointRecord {
            joint: j.name().into(),
            u: kp.u,
            v: kp.v,
            confidence: kp.confidence,
        });
        if let Some(e) = est.joints[j.index()] {
            let depth = transform_point(&camera_from_world, &e.position).z;
            depth_samples.push(DepthSample {
                joint: j.name().into(),
                u: kp.u,
                v: kp.v,
                depth,
            });
        }
    }
    let i = cam.intrinsics;
    CameraRecord {
        camera_id: cam.id.clone(),
        intrinsics: IntrinsicsRecord {
            fx: i.fx,
            fy: i.fy,
            cx: i.cx,
            cy: i.cy,
            width: i.width,
            height: i.height,
        },
        world_from_camera: PoseRecord::from(&cam.world_from_camera),
        keypoints,
        depth_samples,
    }
}

pub fn frame_record(scene: &SceneConfig, frame: &TrackingFrame) -> DatasetRecord {
    DatasetRecord {
        frame_id: frame.frame_id,
        timestamp: frame.time,
        cameras: scene
            .cameras
            .iter()
            .enumerate()
            .map(|(ci, cam)| camera_record(cam, frame, ci))
            .collect(),
        ground_truth: frame
            .truth
            .present()
            .map(|(j, p)| JointPosition {
                joint: j.name().into(),
                position: arr(p),
            })
            .collect(),
        appearance: scene.appearance.clone(),
    }
}

/// 16-bit binary PGM of depth in millimeters; 0 marks no return.
pub fn depth_pgm(width: u32, height: u32, depth: &[Option<f64>]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(depth.len() * 2);
    for d in depth {
        let mm = d.map_or(0, |z| (z * 1000.0).round().clamp(1.0, 65535.0) as u16);
        out.extend_from_slice(&mm.to_be_bytes());
    }
    out
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes the record file, the scene snapshot and, with `full_depth`, one
/// depth raster per camera per frame. Returns the record count.
pub fn export_dataset(
    scene: &SceneConfig,
    snapshot: &str,
    recorder: &mut RunRecorder,
    full_depth: bool,
) -> Result<usize, DatasetError> {
    let run = run_tracking_experiment(scene)?;
    let mut text = String::new();
    for frame in &run.frames {
        text.push_str(
            &serde_json::to_string(&frame_record(scene, frame)).expect("record serializes"),
        );
        text.push('\n');
    }
    recorder.write(DATASET_FILE, text.as_bytes())?;
    recorder.write(SNAPSHOT_FILE, snapshot.as_bytes())?;
    if full_depth {
        for frame in &run.frames {
            let capsules = build_capsules(&frame.truth, &scene.capsule_radii);
            for (ci, cam) in scene.cameras.iter().enumerate() {
                let mut rng = stream(
                    scene.master_seed,
                    "dataset_depth",
                    &[frame.frame_id as u64, ci as u64],
                );
                let raster = render_depth(cam, &capsules, &mut rng);
                let bytes = depth_pgm(cam.intrinsics.width, cam.intrinsics.height, &raster);
                recorder.write(
                    &format!("depth/{:05}_{}.pgm", frame.frame_id, file_safe(&cam.id)),
                    &bytes,
                )?;
            }
        }
    }
    Ok(run.frames.len())
}
