//! Test fields: random admissible displacements, harmonic functions and the
//! harmonic-part decomposition, bump functions and the bending ansaetze,
//! one-dimensional splines, and the field file format.

mod ansatz;
mod bump;
pub mod fieldio;
mod harmonic;
mod random;
mod spline;

pub use ansatz::{bending_norms, kirchhoff_ansatz, scaled_ansatz, scaled_profile, BendingNorms};
pub use bump::{bump, BumpFunction, BumpKind};
pub use harmonic::{
    bilinear_y_norms, harmonic_field, harmonic_part, harmonic_part_of, random_harmonic_field, remainder_poincare,
    DirichletSolver, HarmonicPart, HarmonicRectField, HarmonicTerm, DIRECT_SOLVE_LIMIT, DIRICHLET_TOL,
};
pub use random::{
    random_admissible_field, random_rect_field, random_washer_field, AdmissibleField, Domain, DEFAULT_DECAY,
    MAX_DEGREE, MAX_RANDOM_MODE,
};
pub use spline::Spline1D;
