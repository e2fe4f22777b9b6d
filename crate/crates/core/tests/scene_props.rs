mod common;

use common::vec3;
use humtrack_core::camera::{preset, DepthNoiseModel, Preset};
use humtrack_core::geometry::{look_at, Vec3};
use humtrack_core::motion::synth::{body_pose_at, standing_pose};
use humtrack_core::motion::{Joint, SynthKind};
use humtrack_core::rng::stream;
use humtrack_core::scene::{
    build_capsules, depth_at_pixel, joint_visible, ray_capsule, Capsule, CapsuleRadii,
};
use proptest::prelude::*;

fn capsule() -> impl Strategy<Value = Capsule> {
    (vec3(1.0), vec3(1.0), 0.02..0.5f64).prop_map(|(a, b, r)| Capsule {
        endpoint_a: a,
        endpoint_b: b,
        radius: r,
        owner_joints: vec![],
    })
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3(1.0)
        .prop_filter("non-zero", |d| d.norm() > 0.1)
        .prop_map(|d| d.normalize())
}

proptest! {
    #[test]
    fn hits_lie_on_the_surface(c in capsule(), o in vec3(3.0), d in direction()) {
        if let Some(t) = ray_capsule(&o, &d, &c).unwrap() {
            prop_assert!(t >= 0.0);
            prop_assert!((c.axis_distance(&(o + d * t)) - c.radius).abs() <= 1e-9);
        }
    }

    #[test]
    fn aiming_at_the_axis_always_hits(c in capsule(), o in vec3(3.0), s in 0.0..1.0f64) {
        let target = c.endpoint_a + (c.endpoint_b - c.endpoint_a) * s;
        let d = target - o;
        prop_assume!(d.norm() > 1e-6 && c.axis_distance(&o) > c.radius);
        let hit = ray_capsule(&o, &d.normalize(), &c).unwrap();
        prop_assert!(hit.is_some());
        prop_assert!(hit.unwrap() <= d.norm() + 1e-9);
    }

    #[test]
    fn visibility_is_monotone_in_margin(az in 0.0..std::f64::consts::TAU, t in 0.0..3.0f64, m in 0.0..0.3f64, m2 in 0.0..0.3f64) {
        let eye = Vec3::new(3.0 * az.cos(), 3.0 * az.sin(), 1.2);
        let cam = preset(Preset::KinectV2).with_pose(look_at(&eye, &Vec3::new(0.0, 0.0, 1.0), &Vec3::z()).unwrap());
        let pose = body_pose_at(SynthKind::WaveRightArm, t);
        let caps = build_capsules(&pose, &CapsuleRadii::default());
        let (lo, hi) = if m < m2 { (m, m2) } else { (m2, m) };
        for &j in Joint::ALL {
            let p = pose.get(j).unwrap();
            // A larger margin discounts more of the ray, so visibility can only grow.
            if joint_visible(&cam, &p, &caps, Some(j), lo) {
                prop_assert!(joint_visible(&cam, &p, &caps, Some(j), hi));
            }
        }
    }

    #[test]
    fn noiseless_depth_ignores_rng(seed_a in any::<u64>(), seed_b in any::<u64>(), u in 0.0..512.0f64, v in 0.0..424.0f64) {
        let mut cam = preset(Preset::KinectV2)
            .with_pose(look_at(&Vec3::new(0.0, 2.5, 1.0), &Vec3::new(0.0, 0.0, 1.0), &Vec3::z()).unwrap());
        cam.depth_noise = DepthNoiseModel::noiseless(8.0);
        let caps = build_capsules(&standing_pose(), &CapsuleRadii::default());
        let a = depth_at_pixel(&cam, u, v, &caps, &mut stream(seed_a, "d", &[])).unwrap();
        let b = depth_at_pixel(&cam, u, v, &caps, &mut stream(seed_b, "d", &[])).unwrap();
        prop_assert_eq!(a, b);
    }
}
