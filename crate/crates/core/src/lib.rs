//! Numerical experiments on the inviscid limit of two-dimensional
//! Navier–Stokes flow over a wall with viscosity-dependent Navier slip.
//!
//! The crate is organised bottom-up:
//!
//! - [`profiles`]: shear profiles `u_s(y)` and the tanh family matched to the
//!   slip condition.
//! - [`spectral1d`]: the Schrödinger-type operator `-∂² - K` whose lowest
//!   eigenvalue bounds the instability band.
//! - [`rayleigh`]: unstable Rayleigh modes, dispersion curves, linearized
//!   Euler evolution and wave packets.
//! - [`heat_robin`]: the boundary-layer base flow, a heat equation with a
//!   Robin wall condition.
//! - [`ns2d`]: a vorticity–streamfunction Navier–Stokes and Euler solver,
//!   periodic in `x`.
//! - [`harness`]: convergence, growth and envelope experiments with report
//!   output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod grid;
pub mod harness;
pub mod heat_robin;
pub mod ns2d;
mod ode;
pub mod profiles;
pub mod rayleigh;
pub mod spectral1d;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::GridSpec;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/profiles.md")]
    struct Profiles;
    #[doc = include_str!("../../../book/src/spectrum.md")]
    struct Spectrum;
    #[doc = include_str!("../../../book/src/rayleigh.md")]
    struct Rayleigh;
    #[doc = include_str!("../../../book/src/baseflow.md")]
    struct Baseflow;
    #[doc = include_str!("../../../book/src/navier_stokes.md")]
    struct NavierStokes;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
}
