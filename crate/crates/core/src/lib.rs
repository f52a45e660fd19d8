//! Pressure characterisation for the incompressible Navier–Stokes equations
//! on the whole space, for velocity data with polynomial-weight decay.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of sampled fields on a uniform box grid; file formats, oracles
//! and the command line live in the `wsp` companion crate.
//!
//! Module map:
//!
//! * [`fields`]: grids, sampled fields, finite-difference operators,
//!   weighted norms and the Poincaré potential of a curl-free field.
//! * [`kernels`]: closed-form fundamental solution, its Hessian, the smooth
//!   cutoff, the far kernel, the heat kernel and heat-smoothed third
//!   derivatives, plus the weighted convolution bound integrals.
//! * [`pressure`]: split-kernel pressure assembly, the `p0` path, cutoff
//!   independence, Poisson residual, heat normalization and the source
//!   decomposition `S = ∇p + ∂ₜg`.
//! * [`leray`]: Leray projection of tensor divergences, NS and mild-form
//!   residuals, local energy (suitability) pairings.
//! * [`galilean`]: drift displacement and the extended Galilean change of
//!   frame.
//! * [`spaces`]: local Morrey norms, embedding constants, interpolation
//!   splits and K-functionals.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod conv;
pub mod error;
pub mod exec;
pub mod fft;
pub mod fields;
pub mod galilean;
pub mod kernels;
pub mod leray;
pub mod math;
pub mod pressure;
pub mod spaces;

pub use error::{Error, Result};
pub use exec::{Executor, Serial, SERIAL};
pub use fields::{Grid, ScalarField, TensorField, TimeSeries, VectorField};
pub use kernels::CutoffSpec;
