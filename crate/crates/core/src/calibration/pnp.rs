//! Perspective-n-point: closed-form initialization followed by Gauss-Newton on
//! the reprojection error.

use nalgebra::{
    DMatrix, Matrix2x3, Matrix3, Matrix3x4, Matrix4, SMatrix, SVector, SymmetricEigen,
    UnitQuaternion, Vector2, Vector3,
};
use thiserror::Error;

use crate::camera::CameraIntrinsics;
use crate::geometry::{
    compose, perturb_left, skew, transform_point, RigidTransform, Rotation, Vec3,
};
use crate::scene::plane_fit;

/// Relative flatness below which a point set is treated as planar.
const PLANAR_TOLERANCE: f64 = 1e-9;
const MAX_ITERATIONS: usize = 50;
const STEP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PnpError {
    #[error("{got} correspondences given, {need} required")]
    TooFewPoints { got: usize, need: usize },
    #[error("{points} points but {pixels} pixels")]
    LengthMismatch { points: usize, pixels: usize },
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpSolution {
    pub camera_from_prop: RigidTransform,
    /// Per-axis RMS of the pixel residuals.
    pub rms_reprojection: f64,
    pub point_count: usize,
}

/// Pixel projection of a camera-frame point and its 2x3 Jacobian.
pub(crate) fn project_with_jacobian(
    intr: &CameraIntrinsics,
    p: &Vec3,
) -> (Vector2<f64>, Matrix2x3<f64>) {
    let iz = 1.0 / p.z;
    let uv = Vector2::new(intr.fx * p.x * iz + intr.cx, intr.fy * p.y * iz + intr.cy);
    let j = Matrix2x3::new(
        intr.fx * iz,
        0.0,
        -intr.fx * p.x * iz * iz,
        0.0,
        intr.fy * iz,
        -intr.fy * p.y * iz * iz,
    );
    (uv, j)
}

/// Sum of squared residuals, infinite if any point is not in front.
fn cost(t: &RigidTransform, pts: &[Vec3], px: &[(f64, f64)], intr: &CameraIntrinsics) -> f64 {
    let mut c = 0.0;
    for (p, &(u, v)) in pts.iter().zip(px) {
        let pc = transform_point(t, p);
        if !(pc.z > 0.0) {
            return f64::INFINITY;
        }
        let (uv, _) = project_with_jacobian(intr, &pc);
        c += (uv.x - u).powi(2) + (uv.y - v).powi(2);
    }
    c
}

/// Hartley normalization: translate to the centroid, scale mean distance to sqrt(2).
fn normalize_2d(pts: &[Vector2<f64>]) -> Matrix3<f64> {
    let n = pts.len() as f64;
    let c = pts.iter().sum::<Vector2<f64>>() / n;
    let mean = pts.iter().map(|p| (p - c).norm()).sum::<f64>() / n;
    let s = if mean > 0.0 {
        std::f64::consts::SQRT_2 / mean
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * c.x, 0.0, s, -s * c.y, 0.0, 0.0, 1.0)
}

fn normalize_3d(pts: &[Vec3]) -> Matrix4<f64> {
    let n = pts.len() as f64;
    let c = pts.iter().sum::<Vec3>() / n;
    let mean = pts.iter().map(|p| (p - c).norm()).sum::<f64>() / n;
    let s = if mean > 0.0 { 3f64.sqrt() / mean } else { 1.0 };
    let mut t = Matrix4::identity() * s;
    t[(3, 3)] = 1.0;
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-s * c));
    t
}

/// Null vector of `a` via the smallest eigenpair of `a^T a`; errors when the
/// second-smallest eigenvalue is also negligible.
fn null_vector(a: &DMatrix<f64>) -> Result<nalgebra::DVector<f64>, PnpError> {
    let ata = a.transpose() * a;
    let eig = SymmetricEigen::new(ata);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let largest = eig.eigenvalues[idx[idx.len() - 1]];
    if eig.eigenvalues[idx[1]] <= 1e-14 * largest {
        return Err(PnpError::Degenerate("rank-deficient linear system"));
    }
    Ok(eig.eigenvectors.column(idx[0]).into_owned())
}

fn normalized_image(intr: &CameraIntrinsics, px: &[(f64, f64)]) -> Vec<Vector2<f64>> {
    px.iter()
        .map(|&(u, v)| Vector2::new((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy))
        .collect()
}

/// Homography initialization for coplanar points.
fn init_planar(
    pts: &[Vec3],
    px: &[(f64, f64)],
    intr: &CameraIntrinsics,
) -> Result<RigidTransform, PnpError> {
    let (centroid, _, _) = plane_fit(pts);
    let (e1, e2) = {
        let m = pts.iter().fold(Matrix3::zeros(), |m, p| {
            m + (p - centroid) * (p - centroid).transpose()
        });
        let eig = SymmetricEigen::new(m);
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        (
            eig.eigenvectors.column(idx[0]).into_owned(),
            eig.eigenvectors.column(idx[1]).into_owned(),
        )
    };
    let n = e1.cross(&e2);
    let prop_from_plane = RigidTransform::new(
        Rotation::from_orthonormal(&Matrix3::from_columns(&[e1, e2, n])),
        centroid,
    );

    let plane: Vec<Vector2<f64>> = pts
        .iter()
        .map(|p| Vector2::new((p - centroid).dot(&e1), (p - centroid).dot(&e2)))
        .collect();
    let img = normalized_image(intr, px);
    let tp = normalize_2d(&plane);
    let ti = normalize_2d(&img);
    let mut a = DMatrix::zeros(2 * pts.len(), 9);
    for (k, (p, x)) in plane.iter().zip(&img).enumerate() {
        let p = tp * Vector3::new(p.x, p.y, 1.0);
        let x = ti * Vector3::new(x.x, x.y, 1.0);
        let row0 = [0.0, 0.0, 0.0, -p.x, -p.y, -1.0, x.y * p.x, x.y * p.y, x.y];
        let row1 = [p.x, p.y, 1.0, 0.0, 0.0, 0.0, -x.x * p.x, -x.x * p.y, -x.x];
        for c in 0..9 {
            a[(2 * k, c)] = row0[c];
            a[(2 * k + 1, c)] = row1[c];
        }
    }
    let h = null_vector(&a)?;
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let ti_inv = ti.try_inverse().expect("normalization is invertible");
    let hm = ti_inv * hn * tp;
    let (h1, h2, h3) = (
        hm.column(0).into_owned(),
        hm.column(1).into_owned(),
        hm.column(2).into_owned(),
    );
    let scale = 0.5 * (h1.norm() + h2.norm());
    if !(scale > 0.0) {
        return Err(PnpError::Degenerate("vanishing homography"));
    }

    let mut best: Option<(bool, f64, RigidTransform)> = None;
    for sign in [1.0, -1.0] {
        let r1 = h1 * (sign / scale);
        let r2 = h2 * (sign / scale);
        let r = Rotation::from_matrix_approx(&Matrix3::from_columns(&[r1, r2, r1.cross(&r2)]));
        let camera_from_plane = RigidTransform::new(r, h3 * (sign / scale));
        let candidate = compose(
            &camera_from_plane,
            &crate::geometry::invert(&prop_from_plane),
        );
        let in_front = pts.iter().all(|p| transform_point(&candidate, p).z > 0.0);
        let err = if in_front {
            cost(&candidate, pts, px, intr)
        } else {
            f64::INFINITY
        };
        let better = match &best {
            None => true,
            Some((f, e, _)) => (in_front && !f) || (in_front == *f && err < *e),
        };
        if better {
            best = Some((in_front, err, candidate));
        }
    }
    Ok(best.expect("two candidates evaluated").2)
}

/// Six-point DLT for general point sets.
fn init_dlt(
    pts: &[Vec3],
    px: &[(f64, f64)],
    intr: &CameraIntrinsics,
) -> Result<RigidTransform, PnpError> {
    let img = normalized_image(intr, px);
    let t3 = normalize_3d(pts);
    let ti = normalize_2d(&img);
    let mut a = DMatrix::zeros(2 * pts.len(), 12);
    for (k, (p, x)) in pts.iter().zip(&img).enumerate() {
        let p = t3 * nalgebra::Vector4::new(p.x, p.y, p.z, 1.0);
        let x = ti * Vector3::new(x.x, x.y, 1.0);
        for c in 0..4 {
            a[(2 * k, c)] = p[c];
            a[(2 * k, 8 + c)] = -x.x * p[c];
            a[(2 * k + 1, 4 + c)] = p[c];
            a[(2 * k + 1, 8 + c)] = -x.y * p[c];
        }
    }
    let h = null_vector(&a)?;
    let pn = Matrix3x4::from_row_slice(h.as_slice());
    let mut p = ti.try_inverse().expect("normalization is invertible") * pn * t3;
    // Fix the overall sign so the points sit in front of the camera; det(M) is
    // unreliable for that at long range, where projection is nearly affine.
    let depth_sum: f64 = pts
        .iter()
        .map(|x| p.row(2).dot(&nalgebra::RowVector4::new(x.x, x.y, x.z, 1.0)))
        .sum();
    if depth_sum < 0.0 {
        p = -p;
    }
    let m: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into_owned();
    let alpha = m.singular_values().sum() / 3.0;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(PnpError::Degenerate("singular projection matrix"));
    }
    let r = Rotation::from_matrix_approx(&(m / alpha));
    let t: Vec3 = p.column(3).into_owned() / alpha;
    Ok(RigidTransform::new(r, t))
}

/// The planar pose whose normal is reflected about the ray to the plane
/// centroid; `None` when the two coincide (face-on view).
fn mirrored(t: &RigidTransform, pts: &[Vec3]) -> Option<RigidTransform> {
    let (centroid, normal, _) = plane_fit(pts);
    let c = transform_point(t, &centroid);
    let n = t.rotation.rotate(&normal);
    let d = c.normalize();
    let n2 = d * (2.0 * n.dot(&d)) - n;
    let q = UnitQuaternion::rotation_between(&n, &n2)?;
    if q.angle() < 1e-9 {
        return None;
    }
    let r = Rotation::from_unit(q) * t.rotation;
    Some(RigidTransform::new(r, c - r.rotate(&centroid)))
}

/// Gauss-Newton with step halving; only cost-decreasing steps are accepted.
fn refine(
    init: RigidTransform,
    pts: &[Vec3],
    px: &[(f64, f64)],
    intr: &CameraIntrinsics,
) -> Result<RigidTransform, PnpError> {
    let mut t = init;
    let mut c = cost(&t, pts, px, intr);
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = SMatrix::<f64, 6, 6>::zeros();
        let mut jtr = SVector::<f64, 6>::zeros();
        for (p, &(u, v)) in pts.iter().zip(px) {
            let pc = transform_point(&t, p);
            let (uv, jp) = project_with_jacobian(intr, &pc);
            let mut dp = SMatrix::<f64, 3, 6>::zeros();
            dp.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-skew(&pc)));
            dp.fixed_view_mut::<3, 3>(0, 3)
                .copy_from(&Matrix3::identity());
            let j = jp * dp;
            let r = Vector2::new(uv.x - u, uv.y - v);
            jtj += j.transpose() * j;
            jtr += j.transpose() * r;
        }
        let delta = jtj
            .cholesky()
            .ok_or(PnpError::Degenerate("rank-deficient normal system"))?
            .solve(&(-jtr));
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-6 {
            let d = delta * step;
            let cand = perturb_left(
                &t,
                &d.fixed_rows::<3>(0).into_owned(),
                &d.fixed_rows::<3>(3).into_owned(),
            );
            let cc = cost(&cand, pts, px, intr);
            if cc <= c {
                t = cand;
                c = cc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || delta.norm() * step < STEP_TOLERANCE {
            break;
        }
    }
    Ok(t)
}

/// Estimates `camera_from_prop` from 3D prop points and their pixels.
///
/// Coplanar sets need four points and use a homography; general sets need six
/// and use the DLT.
pub fn solve_pnp(
    points_local: &[Vec3],
    pixels: &[(f64, f64)],
    intr: &CameraIntrinsics,
) -> Result<PnpSolution, PnpError> {
    if points_local.len() != pixels.len() {
        return Err(PnpError::LengthMismatch {
            points: points_local.len(),
            pixels: pixels.len(),
        });
    }
    let n = points_local.len();
    if n < 4 {
        return Err(PnpError::TooFewPoints { got: n, need: 4 });
    }
    let (_, _, spread) = plane_fit(points_local);
    if !(spread[1] > PLANAR_TOLERANCE * spread[0]) {
        return Err(PnpError::Degenerate("collinear points"));
    }
    let t = if spread[2] <= PLANAR_TOLERANCE * spread[0] {
        let first = refine(
            init_planar(points_local, pixels, intr)?,
            points_local,
            pixels,
            intr,
        )?;
        // Planar poses have a second local minimum mirrored about the line of sight.
        match mirrored(&first, points_local).map(|m| refine(m, points_local, pixels, intr)) {
            Some(Ok(second))
                if cost(&second, points_local, pixels, intr)
                    < cost(&first, points_local, pixels, intr) =>
            {
                second
            }
            _ => first,
        }
    } else {
        if n < 6 {
            return Err(PnpError::TooFewPoints { got: n, need: 6 });
        }
        refine(
            init_dlt(points_local, pixels, intr)?,
            points_local,
            pixels,
            intr,
        )?
    };
    let c = cost(&t, points_local, pixels, intr);
    Ok(PnpSolution {
        camera_from_prop: t,
        rms_reprojection: (c / (2 * n) as f64).sqrt(),
        point_count: n,
    })
}
