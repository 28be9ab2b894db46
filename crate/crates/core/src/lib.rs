//! Optimal Korn constants for thin washers and rectangles.
//!
//! * [`cylfield`]: geometry, Fourier-mode displacement fields, the
//!   cylindrical gradient and `rho`/`y`-weighted norms.
//! * [`testfields`]: random admissible fields, harmonic fields and harmonic
//!   parts, bump functions and the bending ansaetze.
//! * [`audit`]: a registry of weighted Korn, Hardy and harmonic-separation
//!   inequalities with evaluators and randomized stress tests.
//! * [`spectral`]: per-mode finite element forms, the generalized eigenvalue
//!   solver, Korn constants and buckling loads.
//! * [`experiment`]: thickness sweeps, scaling fits and report output.

pub mod audit;
pub mod cylfield;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod spectral;
pub mod testfields;

pub use cylfield::{
    gradient_cyl, strain, weighted_norm_sq, BoundaryCondition, FourierField, Grad3, QuadratureSpec, RectField,
    RectGeometry, WasherGeometry, Weight,
};
pub use error::{KornError, Result};
