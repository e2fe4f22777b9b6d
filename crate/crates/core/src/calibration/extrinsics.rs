//! Closed-form multi-camera extrinsics: per-view PnP, pairwise relative poses,
//! and breadth-first propagation from the anchored camera.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::camera::CameraIntrinsics;
use crate::geometry::{
    chordal_mean_rotation, compose, geodesic_angle, invert, transform_point, RigidTransform, Vec3,
};
use crate::scene::{CalibrationProp, WorldAnchor};

use super::pnp::{project_with_jacobian, solve_pnp};
use super::{CalibrationError, FiducialObservation, Target};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub world_from_camera: BTreeMap<String, RigidTransform>,
    /// Per-axis pixel RMS of each camera's observations under this solution.
    pub per_camera_rms: BTreeMap<String, f64>,
    /// Frames in which the prop pose was recovered.
    pub frames_used: usize,
    /// Camera tied to the world through the anchor marker.
    pub reference_camera: String,
    pub world_from_prop: BTreeMap<usize, RigidTransform>,
}

/// `(point, u, v)` triples.
pub(crate) type PointPixels = Vec<(usize, f64, f64)>;

/// Observations bucketed in a canonical order.
pub(crate) struct Grouped {
    /// `(camera, frame)` to `(point, u, v)` sorted by point.
    pub prop: BTreeMap<(String, usize), PointPixels>,
    /// Camera to anchor `(point, u, v)`, stacked over frames, sorted by content.
    pub anchor: BTreeMap<String, PointPixels>,
}

pub(crate) fn group(
    observations: &[FiducialObservation],
    prop: &CalibrationProp,
    anchor: &WorldAnchor,
    cameras: &BTreeMap<String, CameraIntrinsics>,
) -> Result<Grouped, CalibrationError> {
    let mut sorted: Vec<&FiducialObservation> = observations.iter().collect();
    sorted.sort_by(|a, b| {
        (a.target, &a.camera_id, a.frame_id, a.point_id)
            .cmp(&(b.target, &b.camera_id, b.frame_id, b.point_id))
            .then(a.u.total_cmp(&b.u))
            .then(a.v.total_cmp(&b.v))
    });
    let mut grouped = Grouped {
        prop: BTreeMap::new(),
        anchor: BTreeMap::new(),
    };
    for o in sorted {
        if !cameras.contains_key(&o.camera_id) {
            return Err(CalibrationError::UnknownCamera(o.camera_id.clone()));
        }
        let (pattern, list) = match o.target {
            Target::Prop => (
                prop,
                grouped
                    .prop
                    .entry((o.camera_id.clone(), o.frame_id))
                    .or_default(),
            ),
            Target::Anchor => (
                &anchor.marker,
                grouped.anchor.entry(o.camera_id.clone()).or_default(),
            ),
        };
        if o.point_id >= pattern.fiducial_points.len() {
            return Err(CalibrationError::BadPointId {
                target: pattern.name.clone(),
                point_id: o.point_id,
            });
        }
        list.push((o.point_id, o.u, o.v));
    }
    // Anchor stacks are keyed by content alone so frame labels cannot matter.
    for list in grouped.anchor.values_mut() {
        list.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.total_cmp(&b.2))
        });
    }
    Ok(grouped)
}

fn split(obs: &[(usize, f64, f64)], pattern: &[Vec3]) -> (Vec<Vec3>, Vec<(f64, f64)>) {
    obs.iter().map(|&(id, u, v)| (pattern[id], (u, v))).unzip()
}

/// Rotation by chordal mean, translation by arithmetic mean.
pub(crate) fn average_poses(poses: &[RigidTransform]) -> RigidTransform {
    let rotations: Vec<_> = poses.iter().map(|p| p.rotation).collect();
    let rotation = chordal_mean_rotation(&rotations).expect("non-empty pose list");
    let translation = poses.iter().map(|p| p.translation).sum::<Vec3>() / poses.len() as f64;
    RigidTransform::new(rotation, translation)
}

/// Relative poses agreeing within these bounds count as the same estimate.
const CONSENSUS_ROTATION: f64 = 0.15;
const CONSENSUS_TRANSLATION_FRACTION: f64 = 0.1;

/// Average of the largest mutually consistent subset.
///
/// Small planar targets often resolve to the mirrored pose; those views form
/// scattered outliers that would otherwise drag the mean. The input is sorted
/// first, so its order does not matter.
pub(crate) fn consensus_average(poses: &[RigidTransform]) -> RigidTransform {
    let mut poses = poses.to_vec();
    poses.sort_by(|a, b| {
        (0..3)
            .map(|i| a.translation[i].total_cmp(&b.translation[i]))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let poses = &poses[..];
    let agree = |a: &RigidTransform, b: &RigidTransform| {
        let tol = CONSENSUS_TRANSLATION_FRACTION
            * a.translation.norm().max(b.translation.norm()).max(1.0);
        geodesic_angle(&a.rotation, &b.rotation) < CONSENSUS_ROTATION
            && (a.translation - b.translation).norm() < tol
    };
    let mut best: Vec<RigidTransform> = Vec::new();
    for a in poses {
        let inliers: Vec<RigidTransform> = poses.iter().filter(|b| agree(a, b)).copied().collect();
        if inliers.len() > best.len() {
            best = inliers;
        }
    }
    average_poses(&best)
}

fn view_cost(
    camera_from_world: &RigidTransform,
    world_from_prop: &RigidTransform,
    obs: &[(usize, f64, f64)],
    pattern: &[Vec3],
    intr: &CameraIntrinsics,
) -> f64 {
    obs.iter()
        .map(|&(k, u, v)| {
            let pc = transform_point(
                camera_from_world,
                &transform_point(world_from_prop, &pattern[k]),
            );
            if !(pc.z > 0.0) {
                return f64::INFINITY;
            }
            let (uv, _) = project_with_jacobian(intr, &pc);
            (uv.x - u).powi(2) + (uv.y - v).powi(2)
        })
        .sum()
}

/// Squared residual sum and count for one camera, given all poses.
fn camera_residuals(
    id: &str,
    world_from_camera: &RigidTransform,
    grouped: &Grouped,
    world_from_prop: &BTreeMap<usize, RigidTransform>,
    prop: &CalibrationProp,
    anchor: &WorldAnchor,
    intr: &CameraIntrinsics,
) -> (f64, usize) {
    let camera_from_world = invert(world_from_camera);
    let mut sq = 0.0;
    let mut n = 0;
    let mut add = |world: Vec3, u: f64, v: f64| {
        let pc = transform_point(&camera_from_world, &world);
        let (uv, _) = project_with_jacobian(intr, &pc);
        sq += (uv.x - u).powi(2) + (uv.y - v).powi(2);
        n += 1;
    };
    for ((cam, frame), obs) in grouped
        .prop
        .range((id.to_string(), 0)..=(id.to_string(), usize::MAX))
    {
        debug_assert_eq!(cam, id);
        let Some(wp) = world_from_prop.get(frame) else {
            continue;
        };
        for &(k, u, v) in obs {
            add(transform_point(wp, &prop.fiducial_points[k]), u, v);
        }
    }
    if let Some(obs) = grouped.anchor.get(id) {
        for &(k, u, v) in obs {
            add(
                transform_point(&anchor.world_from_marker, &anchor.marker.fiducial_points[k]),
                u,
                v,
            );
        }
    }
    (sq, n)
}

pub(crate) fn per_camera_rms(
    world_from_camera: &BTreeMap<String, RigidTransform>,
    grouped: &Grouped,
    world_from_prop: &BTreeMap<usize, RigidTransform>,
    prop: &CalibrationProp,
    anchor: &WorldAnchor,
    cameras: &BTreeMap<String, CameraIntrinsics>,
) -> BTreeMap<String, f64> {
    world_from_camera
        .iter()
        .map(|(id, w)| {
            let (sq, n) =
                camera_residuals(id, w, grouped, world_from_prop, prop, anchor, &cameras[id]);
            let rms = if n > 0 {
                (sq / (2 * n) as f64).sqrt()
            } else {
                0.0
            };
            (id.clone(), rms)
        })
        .collect()
}

/// Places every camera in the world frame.
///
/// The result does not depend on the order of `observations`.
pub fn estimate_extrinsics(
    observations: &[FiducialObservation],
    prop: &CalibrationProp,
    anchor: &WorldAnchor,
    cameras: &BTreeMap<String, CameraIntrinsics>,
) -> Result<CalibrationResult, CalibrationError> {
    let grouped = group(observations, prop, anchor, cameras)?;

    // Per-view prop poses; views PnP cannot solve are dropped.
    let mut views: BTreeMap<usize, BTreeMap<String, RigidTransform>> = BTreeMap::new();
    for ((cam, frame), obs) in &grouped.prop {
        let (pts, px) = split(obs, &prop.fiducial_points);
        if let Ok(sol) = solve_pnp(&pts, &px, &cameras[cam]) {
            views
                .entry(*frame)
                .or_default()
                .insert(cam.clone(), sol.camera_from_prop);
        }
    }

    // Reference camera: most anchor observations, ties to the smallest id.
    let mut reference: Option<(&String, usize)> = None;
    for (cam, obs) in &grouped.anchor {
        if obs.len() >= 4 && reference.is_none_or(|(_, n)| obs.len() > n) {
            reference = Some((cam, obs.len()));
        }
    }
    let (reference, _) = reference.ok_or(CalibrationError::AnchorNeverObserved)?;
    let (pts, px) = split(&grouped.anchor[reference], &anchor.marker.fiducial_points);
    let camera_from_marker =
        solve_pnp(&pts, &px, &cameras[reference]).map_err(CalibrationError::AnchorPnp)?;
    let world_from_reference = compose(
        &anchor.world_from_marker,
        &invert(&camera_from_marker.camera_from_prop),
    );

    // Pairwise `i_from_j` for i < j, averaged over co-observing frames.
    let mut pairs: BTreeMap<(String, String), Vec<RigidTransform>> = BTreeMap::new();
    for frame_views in views.values() {
        let list: Vec<_> = frame_views.iter().collect();
        for (a, (ci, ti)) in list.iter().enumerate() {
            for (cj, tj) in &list[a + 1..] {
                pairs
                    .entry(((*ci).clone(), (*cj).clone()))
                    .or_default()
                    .push(compose(ti, &invert(tj)));
            }
        }
    }
    let edges: BTreeMap<(String, String), RigidTransform> = pairs
        .into_iter()
        .map(|(k, v)| (k, consensus_average(&v)))
        .collect();
    let mut neighbors: BTreeMap<&String, BTreeSet<&String>> = BTreeMap::new();
    for (a, b) in edges.keys() {
        neighbors.entry(a).or_default().insert(b);
        neighbors.entry(b).or_default().insert(a);
    }

    let mut world_from_camera = BTreeMap::new();
    world_from_camera.insert(reference.clone(), world_from_reference);
    let mut queue = VecDeque::from([reference.clone()]);
    while let Some(a) = queue.pop_front() {
        let Some(next) = neighbors.get(&a) else {
            continue;
        };
        let wa = world_from_camera[&a];
        for &b in next {
            if world_from_camera.contains_key(b) {
                continue;
            }
            let a_from_b = match edges.get(&(a.clone(), b.clone())) {
                Some(t) => *t,
                None => invert(&edges[&(b.clone(), a.clone())]),
            };
            world_from_camera.insert(b.clone(), compose(&wa, &a_from_b));
            queue.push_back(b.clone());
        }
    }
    let unreachable: Vec<String> = cameras
        .keys()
        .filter(|c| !world_from_camera.contains_key(*c))
        .cloned()
        .collect();
    if !unreachable.is_empty() {
        return Err(CalibrationError::Disconnected(unreachable));
    }

    // Each frame's prop pose: the per-camera candidate that best explains all
    // of that frame's views.
    let camera_from_world: BTreeMap<&String, RigidTransform> = world_from_camera
        .iter()
        .map(|(c, w)| (c, invert(w)))
        .collect();
    let world_from_prop: BTreeMap<usize, RigidTransform> = views
        .iter()
        .map(|(frame, fv)| {
            let total = |candidate: &RigidTransform| -> f64 {
                fv.keys()
                    .map(|c| {
                        let obs = &grouped.prop[&(c.clone(), *frame)];
                        view_cost(
                            &camera_from_world[c],
                            candidate,
                            obs,
                            &prop.fiducial_points,
                            &cameras[c],
                        )
                    })
                    .sum()
            };
            let best = fv
                .iter()
                .map(|(c, t)| compose(&world_from_camera[c], t))
                .map(|cand| (total(&cand), cand))
                .fold(
                    None,
                    |best: Option<(f64, RigidTransform)>, (cost, cand)| match best {
                        Some((b, _)) if b <= cost => best,
                        _ => Some((cost, cand)),
                    },
                )
                .expect("frame has at least one view")
                .1;
            (*frame, best)
        })
        .collect();
    let per_camera_rms = per_camera_rms(
        &world_from_camera,
        &grouped,
        &world_from_prop,
        prop,
        anchor,
        cameras,
    );
    Ok(CalibrationResult {
        world_from_camera,
        per_camera_rms,
        frames_used: world_from_prop.len(),
        reference_camera: reference.clone(),
        world_from_prop,
    })
}
