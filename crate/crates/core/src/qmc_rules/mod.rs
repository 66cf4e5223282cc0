//! Randomly shifted rank-1 lattice rules under POD weights and interlaced
//! polynomial lattice rules under SPOD weights.

pub mod gf2;
mod io;
mod lattice;
mod polylat;
mod weights;

pub use io::{read_rule, write_rule};
pub use lattice::{
    cbc_lattice, cbc_lattice_trace, lattice_points, omega, worst_case_error, worst_case_error_sq,
    worst_case_error_sq_naive, CbcStep, LatticeRule,
};
pub use polylat::{cbc_poly_lattice, deinterlace, interlace, walsh_kernel, InterlacedPolyLattice};
pub use weights::{
    interlacing_factor, lambda_rule, pod_weights, pod_weights_with_lambda, rho, spod_weights, write_weights_csv,
    PodWeights, SpodWeights,
};

/// Either cubature family.
#[derive(Debug, Clone, PartialEq)]
pub enum QmcRule {
    Lattice(LatticeRule),
    Interlaced(InterlacedPolyLattice),
}

impl QmcRule {
    pub fn s(&self) -> usize {
        match self {
            QmcRule::Lattice(r) => r.s(),
            QmcRule::Interlaced(r) => r.s,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            QmcRule::Lattice(r) => r.n,
            QmcRule::Interlaced(r) => r.n(),
        }
    }
}
