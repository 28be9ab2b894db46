//! Washer and rectangle geometry, displacement fields, cylindrical gradient
//! calculus and weighted norms.

mod calculus;
mod field;
mod geometry;
mod profile;
mod quadrature;

pub use calculus::{gradient_cyl, strain, sym, theta_weights, Grad3, ModeGradient};
pub use field::{FourierField, ModeCoeffs, ModeJets, RectField};
pub use geometry::{BoundaryCondition, RectGeometry, WasherGeometry};
pub use profile::{shifted_legendre, Axis, ClosedForm, EndCondition, GridSamples, Jet2, PolyProfile, Profile};
pub(crate) use profile::node;
pub use quadrature::{
    composite_nodes, gauss_legendre, mode_norms, rect_integral, washer_integral, washer_norm_set, washer_norm_sets,
    weighted_norm_sq, ModeNorms, Quantity, QuadratureSpec, RectQuantity, Rule, WasherNormSet, WasherQuantity, Weight,
    INV_WEIGHT_FLOOR,
};
