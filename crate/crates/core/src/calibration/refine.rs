//! Joint Levenberg-Marquardt refinement of camera and prop poses.

use std::collections::BTreeMap;
use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix};

use crate::camera::CameraIntrinsics;
use crate::geometry::{invert, perturb_left, skew, transform_point, RigidTransform, Vec3};
use crate::scene::{CalibrationProp, WorldAnchor};

use super::extrinsics::{group, per_camera_rms, Grouped};
use super::pnp::project_with_jacobian;
use super::{CalibrationError, CalibrationResult, FiducialObservation};

const MAX_ITERATIONS: usize = 100;
const RELATIVE_TOLERANCE: f64 = 1e-12;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e12;
/// Costs below this are treated as already optimal.
const COST_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineReport {
    /// Sum of squared pixel residuals.
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Accepted iterations.
    pub iterations: usize,
    /// No step could lower the cost; the initial result was returned.
    pub diverged: bool,
}

struct Problem<'a> {
    cameras: Vec<(&'a String, &'a CameraIntrinsics)>,
    frames: Vec<usize>,
    /// `(camera index, frame index or None for the anchor, world point, u, v)`
    /// with world points in the prop frame for prop observations.
    residuals: Vec<(usize, Option<usize>, Vec3, f64, f64)>,
}

#[derive(Clone)]
struct State {
    camera_from_world: Vec<RigidTransform>,
    world_from_prop: Vec<RigidTransform>,
}

impl<'a> Problem<'a> {
    fn new(
        initial: &CalibrationResult,
        grouped: &Grouped,
        prop: &CalibrationProp,
        anchor: &WorldAnchor,
        intrinsics: &'a BTreeMap<String, CameraIntrinsics>,
    ) -> Self {
        let cameras: Vec<_> = intrinsics
            .iter()
            .filter(|(id, _)| initial.world_from_camera.contains_key(*id))
            .collect();
        let cam_index: BTreeMap<&String, usize> = cameras
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (*id, i))
            .collect();
        let frames: Vec<usize> = initial.world_from_prop.keys().copied().collect();
        let frame_index: BTreeMap<usize, usize> =
            frames.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let mut residuals = Vec::new();
        for ((cam, frame), obs) in &grouped.prop {
            let (Some(&ci), Some(&fi)) = (cam_index.get(cam), frame_index.get(frame)) else {
                continue;
            };
            for &(k, u, v) in obs {
                residuals.push((ci, Some(fi), prop.fiducial_points[k], u, v));
            }
        }
        for (cam, obs) in &grouped.anchor {
            let Some(&ci) = cam_index.get(cam) else {
                continue;
            };
            for &(k, u, v) in obs {
                let world =
                    transform_point(&anchor.world_from_marker, &anchor.marker.fiducial_points[k]);
                residuals.push((ci, None, world, u, v));
            }
        }
        Problem {
            cameras,
            frames,
            residuals,
        }
    }

    fn world_point(&self, s: &State, frame: Option<usize>, p: &Vec3) -> Vec3 {
        match frame {
            Some(f) => transform_point(&s.world_from_prop[f], p),
            None => *p,
        }
    }

    fn cost(&self, s: &State) -> f64 {
        let mut c = 0.0;
        for (ci, f, p, u, v) in &self.residuals {
            let pc = transform_point(&s.camera_from_world[*ci], &self.world_point(s, *f, p));
            if !(pc.z > 0.0) {
                return f64::INFINITY;
            }
            let (uv, _) = project_with_jacobian(self.cameras[*ci].1, &pc);
            c += (uv.x - u).powi(2) + (uv.y - v).powi(2);
        }
        c
    }

    fn dim(&self) -> usize {
        6 * (self.cameras.len() + self.frames.len())
    }

    /// Gauss-Newton normal equations `J^T J` and `J^T r`.
    fn normal_equations(&self, s: &State) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        let mut g = DVector::zeros(n);
        let prop_offset = 6 * self.cameras.len();
        for (ci, f, p, u, v) in &self.residuals {
            let q = self.world_point(s, *f, p);
            let c = &s.camera_from_world[*ci];
            let pc = transform_point(c, &q);
            let (uv, jp) = project_with_jacobian(self.cameras[*ci].1, &pc);
            let r = nalgebra::Vector2::new(uv.x - u, uv.y - v);
            let mut dc = SMatrix::<f64, 3, 6>::zeros();
            dc.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-skew(&pc)));
            dc.fixed_view_mut::<3, 3>(0, 3)
                .copy_from(&Matrix3::identity());
            let jc = jp * dc;
            let mut blocks = vec![(6 * ci, jc)];
            if let Some(fi) = f {
                let rc = c.rotation.matrix();
                let mut dq = SMatrix::<f64, 3, 6>::zeros();
                dq.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-rc * skew(&q)));
                dq.fixed_view_mut::<3, 3>(0, 3).copy_from(&rc);
                blocks.push((prop_offset + 6 * fi, jp * dq));
            }
            for (oa, ja) in &blocks {
                let gr = ja.transpose() * r;
                g.rows_mut(*oa, 6).add_assign(&gr);
                for (ob, jb) in &blocks {
                    let blk = ja.transpose() * jb;
                    let mut view = h.view_mut((*oa, *ob), (6, 6));
                    view += blk;
                }
            }
        }
        (h, g)
    }

    fn apply(&self, s: &State, delta: &DVector<f64>) -> State {
        let step = |t: &RigidTransform, o: usize| {
            let w = Vec3::new(delta[o], delta[o + 1], delta[o + 2]);
            let v = Vec3::new(delta[o + 3], delta[o + 4], delta[o + 5]);
            perturb_left(t, &w, &v)
        };
        let prop_offset = 6 * self.cameras.len();
        State {
            camera_from_world: s
                .camera_from_world
                .iter()
                .enumerate()
                .map(|(i, t)| step(t, 6 * i))
                .collect(),
            world_from_prop: s
                .world_from_prop
                .iter()
                .enumerate()
                .map(|(i, t)| step(t, prop_offset + 6 * i))
                .collect(),
        }
    }
}

/// Bundle adjustment over all camera poses and per-frame prop poses.
///
/// Cameras that see the anchor are held to it through its observations, which
/// fixes the world frame. Only cost-decreasing steps are accepted.
pub fn refine_global(
    initial: &CalibrationResult,
    observations: &[FiducialObservation],
    prop: &CalibrationProp,
    anchor: &WorldAnchor,
    cameras: &BTreeMap<String, CameraIntrinsics>,
) -> Result<(CalibrationResult, RefineReport), CalibrationError> {
    let grouped = group(observations, prop, anchor, cameras)?;
    let problem = Problem::new(initial, &grouped, prop, anchor, cameras);
    let mut state = State {
        camera_from_world: problem
            .cameras
            .iter()
            .map(|(id, _)| invert(&initial.world_from_camera[*id]))
            .collect(),
        world_from_prop: problem
            .frames
            .iter()
            .map(|f| initial.world_from_prop[f])
            .collect(),
    };
    let initial_cost = problem.cost(&state);
    let mut report = RefineReport {
        initial_cost,
        final_cost: initial_cost,
        iterations: 0,
        diverged: false,
    };
    if !(initial_cost > COST_FLOOR) || !initial_cost.is_finite() {
        report.diverged = !initial_cost.is_finite();
        return Ok((initial.clone(), report));
    }

    let mut cost = initial_cost;
    let mut lambda = LAMBDA_INIT;
    'outer: for _ in 0..MAX_ITERATIONS {
        let (h, g) = problem.normal_equations(&state);
        loop {
            let mut damped = h.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * h[(i, i)].max(1e-12);
            }
            let accepted = damped.cholesky().and_then(|ch| {
                let delta = ch.solve(&(-&g));
                let cand = problem.apply(&state, &delta);
                let c = problem.cost(&cand);
                (c < cost).then_some((cand, c))
            });
            match accepted {
                Some((cand, c)) => {
                    let rel = (cost - c) / cost;
                    state = cand;
                    cost = c;
                    report.iterations += 1;
                    lambda = (lambda * 0.1).max(1e-12);
                    if rel < RELATIVE_TOLERANCE || cost <= COST_FLOOR {
                        break 'outer;
                    }
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_MAX {
                        break 'outer;
                    }
                }
            }
        }
    }
    if report.iterations == 0 {
        report.diverged = true;
        return Ok((initial.clone(), report));
    }
    report.final_cost = cost;

    let world_from_camera: BTreeMap<String, RigidTransform> = problem
        .cameras
        .iter()
        .zip(&state.camera_from_world)
        .map(|((id, _), c)| ((*id).clone(), invert(c)))
        .collect();
    let world_from_prop: BTreeMap<usize, RigidTransform> = problem
        .frames
        .iter()
        .copied()
        .zip(state.world_from_prop.iter().copied())
        .collect();
    let per_camera_rms = per_camera_rms(
        &world_from_camera,
        &grouped,
        &world_from_prop,
        prop,
        anchor,
        cameras,
    );
    Ok((
        CalibrationResult {
            world_from_camera,
            per_camera_rms,
            frames_used: initial.frames_used,
            reference_camera: initial.reference_camera.clone(),
            world_from_prop,
        },
        report,
    ))
}
