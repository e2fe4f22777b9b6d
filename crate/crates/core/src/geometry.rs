//! Rigid-body math shared by every other module.
//!
//! Rotations are unit quaternions canonicalized to `w >= 0`. Cameras use the
//! computer-vision axis convention: +Z forward, +X right, +Y down.

use nalgebra::{Matrix3, Matrix4, Quaternion, Rotation3, SymmetricEigen, UnitQuaternion, Vector3};
use thiserror::Error;

/// 3D point or direction in meters.
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("cannot average an empty set of rotations")]
    EmptyRotationSet,
    #[error("degenerate look-at geometry: {0}")]
    DegenerateLookAt(&'static str),
}

/// Unit quaternion rotation with `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(UnitQuaternion<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(UnitQuaternion::identity())
    }

    /// Builds a rotation from raw quaternion components; the input is normalized.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self::from_unit(UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)))
    }

    pub fn from_unit(q: UnitQuaternion<f64>) -> Self {
        if q.w < 0.0 {
            Rotation(UnitQuaternion::new_unchecked(-q.into_inner()))
        } else {
            Rotation(q)
        }
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        match nalgebra::Unit::try_new(*axis, 1e-15) {
            Some(unit) => Self::from_unit(UnitQuaternion::from_axis_angle(&unit, angle)),
            None => Self::identity(),
        }
    }

    /// Rotation from a rotation vector (axis times angle).
    pub fn from_scaled_axis(v: &Vec3) -> Self {
        Self::from_unit(UnitQuaternion::from_scaled_axis(*v))
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::x(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::y(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::z(), angle)
    }

    /// Projects an arbitrary 3x3 matrix onto the closest rotation (SVD).
    pub fn from_matrix_approx(m: &Matrix3<f64>) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd u");
        let v_t = svd.v_t.expect("svd v_t");
        let mut d = Matrix3::identity();
        if (u * v_t).determinant() < 0.0 {
            d[(2, 2)] = -1.0;
        }
        Self::from_orthonormal(&(u * d * v_t))
    }

    /// Closed-form conversion; `m` must already be a rotation matrix.
    pub fn from_orthonormal(m: &Matrix3<f64>) -> Self {
        Self::from_unit(UnitQuaternion::from_rotation_matrix(
            &Rotation3::from_matrix_unchecked(*m),
        ))
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    /// Components as `[w, x, y, z]`.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn inverse(&self) -> Self {
        Self::from_unit(self.0.inverse())
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0.transform_vector(v)
    }

    /// `self * other`: applies `other` first.
    pub fn then_after(&self, other: &Rotation) -> Self {
        Self::from_unit(self.0 * other.0)
    }

    pub fn scaled_axis(&self) -> Vec3 {
        self.0.scaled_axis()
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        self.then_after(&rhs)
    }
}

/// SE(3) pose mapping `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(t: Vec3) -> Self {
        RigidTransform {
            rotation: Rotation::identity(),
            translation: t,
        }
    }

    pub fn from_rotation(r: Rotation) -> Self {
        RigidTransform {
            rotation: r,
            translation: Vec3::zeros(),
        }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        compose(&self, &rhs)
    }
}

/// Translation and rotation discrepancy between two poses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseError {
    /// Meters.
    pub translation_error: f64,
    /// Radians, in `[0, pi]`.
    pub rotation_error: f64,
}

/// Result maps `p -> a(b(p))`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    RigidTransform {
        rotation: a.rotation * b.rotation,
        translation: a.rotation.rotate(&b.translation) + a.translation,
    }
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    let r_inv = t.rotation.inverse();
    RigidTransform {
        rotation: r_inv,
        translation: -r_inv.rotate(&t.translation),
    }
}

pub fn transform_point(t: &RigidTransform, p: &Vec3) -> Vec3 {
    t.rotation.rotate(p) + t.translation
}

/// Angle of the relative rotation `a^T b`, in `[0, pi]`.
///
/// Equal to `acos((trace(Ra^T Rb) - 1) / 2)`; evaluated through the relative
/// quaternion so it stays accurate near 0 and pi.
pub fn geodesic_angle(a: &Rotation, b: &Rotation) -> f64 {
    let rel = a.0.inverse() * b.0;
    let w = rel.w.abs();
    let v = rel.imag().norm();
    (2.0 * v.atan2(w)).clamp(0.0, std::f64::consts::PI)
}

/// Chordal L2 mean: principal eigenvector of `sum q q^T`.
pub fn chordal_mean_rotation(rs: &[Rotation]) -> Result<Rotation, GeometryError> {
    if rs.is_empty() {
        return Err(GeometryError::EmptyRotationSet);
    }
    let mut m = Matrix4::<f64>::zeros();
    for r in rs {
        let q = nalgebra::Vector4::from(r.wxyz());
        m += q * q.transpose();
    }
    let eig = SymmetricEigen::new(m);
    let (idx, _) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    let v = eig.eigenvectors.column(idx);
    Ok(Rotation::from_wxyz(v[0], v[1], v[2], v[3]))
}

/// World-from-camera pose with +Z toward `target` and +Y pointing against `up`.
pub fn look_at(eye: &Vec3, target: &Vec3, up: &Vec3) -> Result<RigidTransform, GeometryError> {
    let forward = target - eye;
    let f_norm = forward.norm();
    if f_norm < 1e-12 {
        return Err(GeometryError::DegenerateLookAt("eye coincides with target"));
    }
    let z = forward / f_norm;
    let x = (-up).cross(&z);
    let x_norm = x.norm();
    if up.norm() < 1e-12 || x_norm < 1e-9 * up.norm() {
        return Err(GeometryError::DegenerateLookAt(
            "up is parallel to the viewing direction",
        ));
    }
    let x = x / x_norm;
    let y = z.cross(&x);
    let rotation = Rotation::from_orthonormal(&Matrix3::from_columns(&[x, y, z]));
    Ok(RigidTransform {
        rotation,
        translation: *eye,
    })
}

pub fn pose_error(estimated: &RigidTransform, truth: &RigidTransform) -> PoseError {
    PoseError {
        translation_error: (estimated.translation - truth.translation).norm(),
        rotation_error: geodesic_angle(&estimated.rotation, &truth.rotation),
    }
}

/// Left perturbation `exp(delta) * t` with `delta = (omega, v)`.
pub(crate) fn perturb_left(t: &RigidTransform, omega: &Vec3, v: &Vec3) -> RigidTransform {
    let dr = Rotation::from_scaled_axis(omega);
    RigidTransform {
        rotation: dr * t.rotation,
        translation: dr.rotate(&t.translation) + v,
    }
}

pub(crate) fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}
