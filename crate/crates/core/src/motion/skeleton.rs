use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{transform_point, RigidTransform, Vec3};

macro_rules! joints {
    ($($variant:ident = $name:literal),* $(,)?) => {
        /// Canonical keypoint set: the 25 BODY-25 body keypoints followed by
        /// two hand keypoints per side.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Joint {
            $(#[serde(rename = $name)] $variant),*
        }

        impl Joint {
            pub const ALL: &'static [Joint] = &[$(Joint::$variant),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Joint::$variant => $name),*
                }
            }
        }

        impl FromStr for Joint {
            type Err = UnknownJoint;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Joint::$variant),)*
                    _ => Err(UnknownJoint(s.to_string())),
                }
            }
        }
    };
}

joints! {
    Nose = "Nose",
    Neck = "Neck",
    RShoulder = "RShoulder",
    RElbow = "RElbow",
    RWrist = "RWrist",
    LShoulder = "LShoulder",
    LElbow = "LElbow",
    LWrist = "LWrist",
    MidHip = "MidHip",
    RHip = "RHip",
    RKnee = "RKnee",
    RAnkle = "RAnkle",
    LHip = "LHip",
    LKnee = "LKnee",
    LAnkle = "LAnkle",
    REye = "REye",
    LEye = "LEye",
    REar = "REar",
    LEar = "LEar",
    LBigToe = "LBigToe",
    LSmallToe = "LSmallToe",
    LHeel = "LHeel",
    RBigToe = "RBigToe",
    RSmallToe = "RSmallToe",
    RHeel = "RHeel",
    RHand = "RHand",
    RThumb = "RThumb",
    LHand = "LHand",
    LThumb = "LThumb",
}

pub const JOINT_COUNT: usize = 29;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown canonical joint name `{0}`")]
pub struct UnknownJoint(pub String);

impl Joint {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_hand(self) -> bool {
        matches!(
            self,
            Joint::RHand | Joint::RThumb | Joint::LHand | Joint::LThumb
        )
    }
}

impl fmt::Display for Joint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-joint slot indexed by [`Joint`].
pub type JointTable<T> = [T; JOINT_COUNT];

/// World-frame joint positions at one instant; `None` marks an absent joint.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonPose {
    pub timestamp: f64,
    pub joints: JointTable<Option<Vec3>>,
}

impl SkeletonPose {
    pub fn empty(timestamp: f64) -> Self {
        SkeletonPose {
            timestamp,
            joints: [None; JOINT_COUNT],
        }
    }

    pub fn get(&self, joint: Joint) -> Option<Vec3> {
        self.joints[joint.index()]
    }

    pub fn set(&mut self, joint: Joint, position: Option<Vec3>) {
        self.joints[joint.index()] = position;
    }

    pub fn present(&self) -> impl Iterator<Item = (Joint, Vec3)> + '_ {
        Joint::ALL
            .iter()
            .filter_map(move |&j| self.get(j).map(|p| (j, p)))
    }

    pub fn transformed(&self, t: &RigidTransform) -> SkeletonPose {
        let mut out = self.clone();
        for p in out.joints.iter_mut().flatten() {
            *p = transform_point(t, p);
        }
        out
    }
}
