//! Constructive objects of polynomial dynamics at desk scale: external rays,
//! Green potentials, fixed-ray partitions of the plane, cycle censuses and
//! polynomial-like restrictions, each with numerical certificates.

// `!(x > 0.0)` deliberately treats NaN as failing the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod angle;
pub mod census;
pub mod error;
pub mod geometry;
pub mod par;
pub mod poly;
pub mod probe;
pub mod potential;
pub mod ray;
pub mod renorm;
pub mod separation;

pub use angle::Angle;
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use poly::Polynomial;
