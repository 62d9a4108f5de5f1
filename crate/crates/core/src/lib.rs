//! Bi-criteria path planning on probabilistic roadmaps.
//!
//! The pipeline builds a roadmap over an occupancy grid, weights every edge
//! with a primary cost (distance by default) and a constrained secondary
//! cost (threat exposure), and recovers the Pareto front between the two
//! with a single ascending sweep over quantized budget levels.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget_dp;
pub mod costs;
pub mod error;
pub mod geometry;
pub mod instances;
pub mod io;
pub mod oracle;
pub mod roadmap;
pub mod scalar_sp;
pub mod verify;

pub use error::{Error, Result};
