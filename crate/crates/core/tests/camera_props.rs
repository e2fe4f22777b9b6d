mod common;

use common::{transform, vec3};
use humtrack_core::camera::{
    apply_depth_noise, back_project, preset, project, DepthNoiseModel, Preset,
};
use humtrack_core::geometry::{transform_point, Vec3};
use humtrack_core::rng::stream;
use proptest::prelude::*;

fn preset_kind() -> impl Strategy<Value = Preset> {
    prop::sample::select(Preset::ALL.to_vec())
}

proptest! {
    #[test]
    fn project_then_back_project(kind in preset_kind(), pose in transform(5.0), p in vec3(1.0), z in 0.2..8.0f64) {
        let cam = preset(kind).with_pose(pose);
        let p_cam = Vec3::new(p.x, p.y, z);
        let world = transform_point(&pose, &p_cam);
        let ip = project(&cam, &world).unwrap();
        prop_assert!((ip.depth - z).abs() <= 1e-9);
        let back = back_project(&cam, ip.u, ip.v, ip.depth).unwrap();
        prop_assert!((back - world).norm() <= 1e-9 * (1.0 + world.norm()));
    }

    #[test]
    fn scaling_along_the_ray_keeps_the_pixel(kind in preset_kind(), p in vec3(1.0), z in 0.2..5.0f64, s in 0.1..10.0f64) {
        let intr = kind.intrinsics();
        let a = intr.project_camera(&Vec3::new(p.x, p.y, z)).unwrap();
        let b = intr.project_camera(&(Vec3::new(p.x, p.y, z) * s)).unwrap();
        prop_assert!((a.u - b.u).abs() <= 1e-9 && (a.v - b.v).abs() <= 1e-9);
        prop_assert!((b.depth - s * a.depth).abs() <= 1e-12 * b.depth.max(1.0));
    }

    #[test]
    fn depth_noise_is_reproducible(seed in any::<u64>(), z in 0.1..10.0f64) {
        let m = DepthNoiseModel::default();
        let a = apply_depth_noise(&m, z, &mut stream(seed, "depth", &[]));
        let b = apply_depth_noise(&m, z, &mut stream(seed, "depth", &[]));
        prop_assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        prop_assert_eq!(a.is_none(), z > m.max_range);
    }
}
