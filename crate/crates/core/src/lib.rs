//! Quasi-Monte Carlo finite element methods for the Helmholtz equation with a
//! random refractive index, using a coercive (sign-definite) variational
//! formulation discretized by `C^{p-1}` tensor-product splines.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry_constants`]: domain constants, free form parameters and the
//!   wavenumber-explicit coercivity/continuity/regularity constants.
//! * [`random_field`]: the affine-parametric index field and truncation quantities.
//! * [`spline_fem`]: spline space, assembly, solve, functionals.
//! * [`parametric_derivatives`]: mixed parametric derivatives and their bound.
//! * [`qmc_rules`]: lattice rules (POD weights) and interlaced polynomial lattice rules (SPOD weights).
//! * [`uq_estimator`]: estimator, error budget and the convergence studies.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geometry_constants;
pub mod linalg;
pub mod math;
pub mod parametric_derivatives;
pub mod qmc_rules;
pub mod random_field;
pub mod spline_fem;
pub mod uq_estimator;

pub use error::{Error, Result};
