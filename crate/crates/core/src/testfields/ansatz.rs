use serde::Serialize;
use std::f64::consts::PI;

use super::bump::BumpFunction;
use crate::cylfield::{FourierField, Jet2, ModeCoeffs, Profile, WasherGeometry};
use crate::error::{KornError, Result};

/// Panels for the one-dimensional integrals over the bump support.
const PANELS: usize = 200;

/// Axisymmetric bending field `u = (-z phi'(rho), 0, phi(rho))`.
fn bending_field(geom: &WasherGeometry, phi: BumpFunction) -> Result<FourierField> {
    let mut m = ModeCoeffs::new(0);
    m.a_rho = Profile::closed(move |rho, z| {
        let (_, d1, d2) = phi.eval(rho);
        Jet2::new(-z * d1, -z * d2, -d1)
    });
    m.a_z = Profile::closed(move |rho, _| {
        let (p, d1, _) = phi.eval(rho);
        Jet2::new(p, d1, 0.0)
    });
    FourierField::new(*geom, vec![m])
}

/// Kirchhoff ansatz `u_rho = -z phi'(rho)`, `u_theta = 0`, `u_z = phi(rho)`.
/// The bump has to live in the outer half `[(R+r)/2, R]` of the annulus.
pub fn kirchhoff_ansatz(geom: &WasherGeometry, phi: &BumpFunction) -> Result<FourierField> {
    let lo = 0.5 * (geom.inner + geom.outer);
    let tol = 1e-12 * geom.outer;
    if phi.a < lo - tol || phi.b > geom.outer + tol {
        return Err(KornError::Support(format!(
            "bump support [{}, {}] is not inside [{lo}, {}]",
            phi.a, phi.b, geom.outer
        )));
    }
    bending_field(geom, *phi)
}

/// Boundary-layer ansatz: the Kirchhoff ansatz of `psi(rho) = phi(b + (rho - b) / h^alpha)`,
/// whose support `[b - w h^alpha, b]` (`w` the width of `phi`) shrinks with `h`.
/// At `alpha = 0` this is exactly [`kirchhoff_ansatz`].
pub fn scaled_ansatz(geom: &WasherGeometry, phi: &BumpFunction, alpha: f64, h: f64) -> Result<FourierField> {
    if !(0.0..=0.5).contains(&alpha) {
        return Err(KornError::InvalidArgument(format!("alpha must lie in [0, 1/2], got {alpha}")));
    }
    if !(h > 0.0) {
        return Err(KornError::InvalidArgument(format!("thickness must be positive, got {h}")));
    }
    if alpha == 0.0 {
        return kirchhoff_ansatz(geom, phi);
    }
    let psi = scaled_profile(phi, alpha, h)?;
    if psi.a <= geom.inner || psi.b > geom.outer * (1.0 + 1e-12) {
        return Err(KornError::Support(format!(
            "scaled support [{}, {}] leaves the annulus ({}, {}]",
            psi.a, psi.b, geom.inner, geom.outer
        )));
    }
    bending_field(geom, psi)
}

/// The radial profile `psi` used by [`scaled_ansatz`].
pub fn scaled_profile(phi: &BumpFunction, alpha: f64, h: f64) -> Result<BumpFunction> {
    phi.compressed(h.powf(alpha))
}

/// Closed-form squared norms of a bending field `(-z psi', 0, psi)` on a
/// washer of thickness `h`, reduced to integrals over the support of `psi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BendingNorms {
    /// `||sqrt(rho) e(u)||^2 = 2 pi (h^3/3) int (rho psi''^2 + psi'^2 / rho)`.
    pub strain: f64,
    /// `||sqrt(rho) grad u||^2 = strain + 4 pi h int rho psi'^2`.
    pub grad: f64,
    /// `||sqrt(rho) u_z||^2 = 2 pi h int rho psi^2`.
    pub uz: f64,
}

pub fn bending_norms(h: f64, psi: &BumpFunction) -> BendingNorms {
    let bend = psi.integrate(PANELS, |rho, _, d1, d2| rho * d2 * d2 + d1 * d1 / rho);
    let shear = psi.integrate(PANELS, |rho, _, d1, _| rho * d1 * d1);
    let mass = psi.integrate(PANELS, |rho, p, _, _| rho * p * p);
    let strain = 2.0 * PI * h.powi(3) / 3.0 * bend;
    BendingNorms {
        strain,
        grad: strain + 4.0 * PI * h * shear,
        uz: 2.0 * PI * h * mass,
    }
}
