//! Shared proptest strategies.
#![allow(dead_code)]

use humtrack_core::geometry::{RigidTransform, Rotation, Vec3};
use proptest::prelude::*;

pub fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Uniform-ish rotations from normalized 4-vectors away from the origin.
pub fn rotation() -> impl Strategy<Value = Rotation> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("not near zero", |(w, x, y, z)| {
            w * w + x * x + y * y + z * z > 0.01
        })
        .prop_map(|(w, x, y, z)| Rotation::from_wxyz(w, x, y, z))
}

pub fn transform(range: f64) -> impl Strategy<Value = RigidTransform> {
    (rotation(), vec3(range)).prop_map(|(r, t)| RigidTransform::new(r, t))
}

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}
