//! Steady viscous wakes above a wall: solvers, diagnostics, and oracles.
//!
//! This crate studies stationary incompressible flow in the half-plane above
//! a wall at `y = 1`, driven either by a compactly supported force or by a
//! small obstacle translating along the wall. The workhorse representation is
//! a Fourier transform in the wall-parallel direction: each wavenumber `k`
//! carries a small ODE boundary-value problem in the wall-normal coordinate,
//! and the nonlinear term couples wavenumbers through a scaled convolution.
//!
//! Module map, bottom to top:
//!
//! * [`grid`], [`field`] — discretizations and containers;
//! * [`fd`] — finite-difference weights, derivatives, high-order cumulative
//!   integrals;
//! * [`transform`] — FFT-backed transforms between physical and spectral
//!   fields plus direct evaluation on arbitrary wavenumber sets;
//! * [`convolve`] — wavenumber-domain products;
//! * [`calculus`] — gradients, stream functions, quadrature-based norms and
//!   bilinear forms on physical fields;
//! * [`norms`] — weighted sup-norm machinery quantifying spatial decay, and
//!   the decay-rate bookkeeping built on it;
//! * [`oseen`] — the per-wavenumber linearized solver (exponential
//!   characteristic integration plus a wall correction);
//!
//! Heavy per-mode and per-row loops run under `rayon` when the `parallel`
//! feature (default) is enabled; every parallel entry point has a `_serial`
//! twin with bit-identical output, used by the benchmark suite and available
//! for debugging.

pub mod alpha;
pub mod calculus;
pub mod convolve;
pub mod error;
pub mod exec;
pub mod fd;
pub mod field;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod oracle;
pub mod oseen;
pub mod reference;
pub mod transform;
pub mod truncation;

pub use error::{Error, Result};
