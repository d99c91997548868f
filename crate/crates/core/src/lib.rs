//! Physically based synthetic data generation for single-image reflection
//! removal.
//!
//! Glass panes are path traced over HDR environment maps and LDR billboards.
//! Each sample is rendered as five linear layers:
//!
//! * `I`  full glass transport,
//! * `T`  paths leaving the glass on the far side (transmission),
//! * `B`  background with the glass removed,
//! * `R`  paths leaving the glass on the camera side (reflection),
//! * `MR` the glass front face replaced by a lossless mirror.
//!
//! The layers are post-processed with a shared camera pipeline and packaged
//! as `[I:T:R]` composites for in-context fine-tuning.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod dataset;
pub mod error;
pub mod imagecore;
pub mod math;
pub mod metrics;
pub mod optics;
pub mod postfx;
pub mod render;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
