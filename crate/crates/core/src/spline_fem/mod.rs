//! Tensor-product spline Galerkin discretization of the coercive Helmholtz
//! formulation on the centred square.

mod assemble;
mod data;
pub mod mm;
mod problem;
mod space;

pub use assemble::{
    assemble_load, assemble_matrix, assemble_rhs, assemble_system, assemble_vnorm_gram, AssembledSystem,
    EdgeLoadCoeffs, FieldTable, LoadCoeffs, Physics, QpInfo,
};
pub use data::{DefaultData, PlaneWave, SourceData, ZeroData};
pub use problem::{
    check_finite, data_norms, form_direct, relative_residual, relative_residual_with, solve, vnorm_error, Functional,
    FunctionalKind, Solution,
};
pub use space::{BSpline1d, Edge, EdgePoint, SplineSpace, VolumePoint};
