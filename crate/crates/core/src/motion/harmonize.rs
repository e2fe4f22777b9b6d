//! Joint-name harmonization onto the canonical keypoint set.
//!
//! A map renames source joints to canonical joints. Canonical joints with no
//! source fall back to another canonical joint's position (hands follow their
//! wrist), following fallback chains until a mapped joint is found.

use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;
use thiserror::Error;

use super::skeleton::{Joint, JointTable, UnknownJoint, JOINT_COUNT};
use crate::geometry::Vec3;

#[derive(Debug, Error)]
pub enum HarmonizationError {
    #[error("harmonization map is not valid TOML: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error(transparent)]
    UnknownJoint(#[from] UnknownJoint),
    #[error("fallback rules form a cycle through `{0}`")]
    Cycle(Joint),
    #[error("joint `{0}` has more than one fallback rule")]
    DuplicateFallback(Joint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonizationMap {
    pairs: Vec<(String, Joint)>,
    fallback: JointTable<Option<Joint>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    #[serde(default)]
    pairs: Vec<(String, String)>,
    #[serde(default)]
    fallbacks: Vec<(String, String)>,
}

/// Hands follow their wrists.
pub const HAND_FALLBACKS: [(Joint, Joint); 4] = [
    (Joint::RHand, Joint::RWrist),
    (Joint::RThumb, Joint::RWrist),
    (Joint::LHand, Joint::LWrist),
    (Joint::LThumb, Joint::LWrist),
];

impl HarmonizationMap {
    pub fn new(
        pairs: impl IntoIterator<Item = (String, Joint)>,
        fallbacks: impl IntoIterator<Item = (Joint, Joint)>,
    ) -> Result<Self, HarmonizationError> {
        let mut fallback = [None; JOINT_COUNT];
        for (joint, parent) in fallbacks {
            if fallback[joint.index()].replace(parent).is_some() {
                return Err(HarmonizationError::DuplicateFallback(joint));
            }
        }
        for &start in Joint::ALL {
            let mut cur = start;
            for _ in 0..=JOINT_COUNT {
                match fallback[cur.index()] {
                    Some(next) if next == start => return Err(HarmonizationError::Cycle(start)),
                    Some(next) => cur = next,
                    None => break,
                }
            }
        }
        Ok(HarmonizationMap {
            pairs: pairs.into_iter().collect(),
            fallback,
        })
    }

    /// Canonical names mapped to themselves, hands falling back to wrists.
    pub fn canonical() -> Self {
        Self::new(
            Joint::ALL
                .iter()
                .filter(|j| !j.is_hand())
                .map(|j| (j.name().to_string(), *j)),
            HAND_FALLBACKS,
        )
        .expect("static map is valid")
    }

    /// Map for the common `Hips / LeftUpLeg / LeftForeArm` BVH naming scheme.
    pub fn default_bvh() -> Self {
        use Joint::*;
        let pairs = [
            ("Hips", MidHip),
            ("Neck", Neck),
            ("Head", Nose),
            ("RightArm", RShoulder),
            ("RightForeArm", RElbow),
            ("RightHand", RWrist),
            ("LeftArm", LShoulder),
            ("LeftForeArm", LElbow),
            ("LeftHand", LWrist),
            ("RightUpLeg", RHip),
            ("RightLeg", RKnee),
            ("RightFoot", RAnkle),
            ("RightToeBase", RBigToe),
            ("LeftUpLeg", LHip),
            ("LeftLeg", LKnee),
            ("LeftFoot", LAnkle),
            ("LeftToeBase", LBigToe),
        ];
        let fallbacks = HAND_FALLBACKS.into_iter().chain([
            (RSmallToe, RBigToe),
            (LSmallToe, LBigToe),
            (RHeel, RAnkle),
            (LHeel, LAnkle),
            (REye, Nose),
            (LEye, Nose),
            (REar, Nose),
            (LEar, Nose),
        ]);
        Self::new(pairs.iter().map(|(s, j)| (s.to_string(), *j)), fallbacks)
            .expect("static map is valid")
    }

    /// Parses `pairs = [["Source", "Canonical"], ...]` and
    /// `fallbacks = [["Canonical", "ParentCanonical"], ...]`.
    pub fn from_toml(text: &str) -> Result<Self, HarmonizationError> {
        let file: MapFile = toml::from_str(text)?;
        let pairs = file
            .pairs
            .into_iter()
            .map(|(s, c)| Ok((s, c.parse::<Joint>()?)))
            .collect::<Result<Vec<_>, UnknownJoint>>()?;
        let fallbacks = file
            .fallbacks
            .into_iter()
            .map(|(j, p)| Ok((j.parse::<Joint>()?, p.parse::<Joint>()?)))
            .collect::<Result<Vec<_>, UnknownJoint>>()?;
        Self::new(pairs, fallbacks)
    }

    pub fn pairs(&self) -> &[(String, Joint)] {
        &self.pairs
    }

    pub fn fallback_of(&self, joint: Joint) -> Option<Joint> {
        self.fallback[joint.index()]
    }
}

/// Renames raw joints onto the canonical set, filling gaps by fallback copy.
pub fn harmonize(raw: &BTreeMap<String, Vec3>, map: &HarmonizationMap) -> JointTable<Option<Vec3>> {
    let lookup: HashMap<&str, &Vec3> = raw.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let mut direct = [None; JOINT_COUNT];
    for (source, joint) in &map.pairs {
        if let Some(p) = lookup.get(source.as_str()) {
            direct[joint.index()].get_or_insert(**p);
        }
    }
    let mut out = direct;
    for &joint in Joint::ALL {
        if out[joint.index()].is_some() {
            continue;
        }
        let mut cur = joint;
        while let Some(next) = map.fallback[cur.index()] {
            if let Some(p) = direct[next.index()] {
                out[joint.index()] = Some(p);
                break;
            }
            cur = next;
        }
    }
    out
}
