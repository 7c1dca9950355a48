//! Mass-distribution and friction estimation for planar objects modelled as
//! grids of particles, from grasp-and-slide and grasp-and-rotate motions.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod baselines;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod object_model;

pub use error::{Error, Result};
