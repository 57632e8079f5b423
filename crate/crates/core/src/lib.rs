//! Geodesics, cut loci and small-time heat kernels on two-spheres of revolution.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod degeneracy;
pub mod error;
pub mod fit;
pub mod geodesics;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod roots;
pub mod series;
pub mod special;
pub mod spectral;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
