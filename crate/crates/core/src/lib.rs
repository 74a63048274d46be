//! Perception entropy for LiDAR and camera sensor configurations.
//!
//! A configuration is scored by the expected entropy of an object's ground-plane
//! position given what the sensors measure of it. Measurements are simulated per
//! 0.1 m voxel (beam hits for LiDAR, covered pixel centers for cameras), mapped
//! through a log-linear average-precision curve to a Gaussian standard deviation,
//! fused across sensors, and averaged under a spatial prior of where objects
//! tend to be. Lower is better.
//!
//! - [`sensor`]: poses, LiDAR and camera geometry, vehicle self-occlusion.
//! - [`entropy`]: measurement → AP → σ → entropy, and AP curve regression.
//! - [`fusion`]: early (summed counts) and late (inverse-variance) fusion.
//! - [`prior`]: the perception space grid and the weighted object prior.
//! - [`evaluator`]: grid sweep producing an [`evaluator::EntropyReport`].
//! - [`optimizer`]: shrinking-neighborhood random search over placements.
//! - [`config`]: the JSON scenario file.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod entropy;
pub mod error;
pub mod evaluator;
pub mod fusion;
pub mod optimizer;
pub mod prior;
pub mod sensor;

pub use error::{Error, Result};
