//! Spectral analysis of the Laplacian on sheared waveguide-shaped surfaces.
//!
//! The surface is parametrized over the strip `R x C` (with `C` the unit-length
//! circle) as `r(x) + xi1(t) e2 + xi2(t) e3` with `r(x) = (x, f(x), g(x))`.
//! This crate is `no_std` (it needs `alloc`) and holds every numerical piece:
//! cross-sections and profiles, the periodic transverse operator and its fibers,
//! the effective potential, the 2D quadratic-form discretization with a sparse
//! eigensolver, and the variational certificates.

#![no_std]
#![forbid(unsafe_code)]
// `!(a > b)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod certificates;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod potential;
pub mod spectral;
pub mod spectrum2d;
pub mod transverse;

mod math;

pub use error::{Error, Result};
