//! Banded symmetric storage, banded Cholesky, conjugate gradients and a
//! generalized symmetric eigensolver.

mod band;
mod cg;
mod eigen;

pub use band::{BandCholesky, SymBand};
pub use cg::{conjugate_gradient, CgSolution};
pub use eigen::{
    dense_pencil_eigen, pencil_residual, smallest_eigenpairs, Eigenpair, PencilOptions, PencilSolution, DENSE_CUTOFF,
};
