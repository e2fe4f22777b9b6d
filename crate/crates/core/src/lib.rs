//! Deterministic simulator for multi-camera human tracking: synthetic depth
//! cameras, extrinsic calibration from a tracked prop, skeleton fusion and a
//! hand-guided teleoperation loop.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod camera;
pub mod geometry;
pub mod motion;
pub mod rng;
pub mod scene;
pub mod teleop;
pub mod tracking;
