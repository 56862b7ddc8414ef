//! Numerical toolkit for planar reduced and general Beltrami equations.
//!
//! The plane is approximated by a periodic square grid on which `d/dz`,
//! `d/dzbar`, the Cauchy transform and the Beurling transform are exact
//! Fourier multipliers. On top of these the crate provides
//!
//! - [`beltrami`]: Neumann-series solvers and exact affine solutions,
//! - [`wronskian`]: the null Lagrangian `Im(f_z)`, the Jacobian and the
//!   Wronskian of two solutions, plus the factorization identities,
//! - [`recovery`]: recovery of the unique coefficients `(mu, nu)` shared by
//!   two independent solutions,
//! - [`adjoint`]: the divergence-form matrix of the reduced equation, weak
//!   residuals, and reverse Hölder / decay probes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod beltrami;
pub mod error;
pub mod field;
pub mod recovery;
pub mod transforms;
pub mod wronskian;

pub use error::{Error, Result};
pub use field::{ComplexField, DiskMask, GridSpec, NormKind, RealField};
