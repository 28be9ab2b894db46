//! Cartesian gradient of a displacement written in cylindrical components.
//!
//! Rows index the displacement component and columns the derivative
//! direction, both ordered `(rho, theta, z)`:
//!
//! ```text
//! | u_rho,rho    (u_rho,theta - u_theta)/rho    u_rho,z   |
//! | u_theta,rho  (u_theta,theta + u_rho)/rho    u_theta,z |
//! | u_z,rho      u_z,theta/rho                  u_z,z     |
//! ```

use nalgebra::Matrix3;

use super::field::{FourierField, ModeJets};
use crate::error::{KornError, Result};

/// 3x3 gradient in the cylindrical frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grad3(pub Matrix3<f64>);

impl Grad3 {
    pub fn zero() -> Self {
        Grad3(Matrix3::zeros())
    }

    /// `(G + G^T) / 2`, built entry by entry so the result is exactly symmetric.
    pub fn sym(&self) -> Matrix3<f64> {
        sym(&self.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

pub fn sym(g: &Matrix3<f64>) -> Matrix3<f64> {
    let mut e = Matrix3::zeros();
    for i in 0..3 {
        e[(i, i)] = g[(i, i)];
        for j in (i + 1)..3 {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            e[(i, j)] = v;
            e[(j, i)] = v;
        }
    }
    e
}

/// Gradient of a single mode split into the coefficient matrices of
/// `cos(n theta)` and `sin(n theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGradient {
    pub cos: Matrix3<f64>,
    pub sin: Matrix3<f64>,
}

impl ModeGradient {
    pub fn from_jets(n: u32, j: &ModeJets, rho: f64) -> Self {
        let n = n as f64;
        let inv = 1.0 / rho;
        #[rustfmt::skip]
        let cos = Matrix3::new(
            j.a_rho.d1,   (n * j.b_rho.v - j.a_theta.v) * inv,   j.a_rho.d2,
            j.a_theta.d1, (n * j.b_theta.v + j.a_rho.v) * inv,   j.a_theta.d2,
            j.a_z.d1,     n * j.b_z.v * inv,                     j.a_z.d2,
        );
        #[rustfmt::skip]
        let sin = Matrix3::new(
            j.b_rho.d1,   (-n * j.a_rho.v - j.b_theta.v) * inv,  j.b_rho.d2,
            j.b_theta.d1, (-n * j.a_theta.v + j.b_rho.v) * inv,  j.b_theta.d2,
            j.b_z.d1,     -n * j.a_z.v * inv,                    j.b_z.d2,
        );
        Self { cos, sin }
    }

    pub fn at(&self, n: u32, theta: f64) -> Matrix3<f64> {
        let (s, c) = (n as f64 * theta).sin_cos();
        self.cos * c + self.sin * s
    }
}

/// `int_0^{2 pi} cos^2(n theta)` and `int_0^{2 pi} sin^2(n theta)`.
pub fn theta_weights(n: u32) -> (f64, f64) {
    use std::f64::consts::PI;
    if n == 0 {
        (2.0 * PI, 0.0)
    } else {
        (PI, PI)
    }
}

fn check_point(field: &FourierField, rho: f64, theta: f64, z: f64) -> Result<()> {
    if !(rho > 0.0) || !theta.is_finite() {
        return Err(KornError::OutsideDomain { rho, theta, z });
    }
    if !field.geometry().contains(rho, z) {
        return Err(KornError::OutsideDomain { rho, theta, z });
    }
    Ok(())
}

/// Gradient of `field` at `(rho, theta, z)`.
pub fn gradient_cyl(field: &FourierField, rho: f64, theta: f64, z: f64) -> Result<Grad3> {
    check_point(field, rho, theta, z)?;
    let mut g = Matrix3::zeros();
    for m in field.modes() {
        let mg = ModeGradient::from_jets(m.n, &m.jets(rho, z), rho);
        g += mg.at(m.n, theta);
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(KornError::NonFinite("gradient".into()));
    }
    Ok(Grad3(g))
}

/// Symmetrised gradient `e(u)` at `(rho, theta, z)`.
pub fn strain(field: &FourierField, rho: f64, theta: f64, z: f64) -> Result<Matrix3<f64>> {
    Ok(gradient_cyl(field, rho, theta, z)?.sym())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylfield::{Jet2, ModeCoeffs, Profile, WasherGeometry};

    fn washer() -> WasherGeometry {
        WasherGeometry::new(0.5, 1.0, 0.1, 1.0).unwrap()
    }

    fn axisym(a_rho: Profile, a_theta: Profile, a_z: Profile) -> FourierField {
        let mut m = ModeCoeffs::new(0);
        m.a_rho = a_rho;
        m.a_theta = a_theta;
        m.a_z = a_z;
        FourierField::new(washer(), vec![m]).unwrap()
    }

    #[test]
    fn rigid_rotation_is_antisymmetric() {
        let w = 0.7;
        let f = axisym(
            Profile::Zero,
            Profile::closed(move |rho, _| Jet2::new(w * rho, w, 0.0)),
            Profile::Zero,
        );
        let g = gradient_cyl(&f, 0.8, 1.1, 0.05).unwrap();
        #[rustfmt::skip]
        let expect = Matrix3::new(0.0, -w, 0.0,
                                  w, 0.0, 0.0,
                                  0.0, 0.0, 0.0);
        assert!((g.0 - expect).norm() < 1e-15);
        assert_eq!(strain(&f, 0.8, 1.1, 0.05).unwrap(), Matrix3::zeros());
    }

    #[test]
    fn translation_along_axis_has_zero_gradient() {
        let f = axisym(Profile::Zero, Profile::Zero, Profile::closed(|_, _| Jet2::new(3.0, 0.0, 0.0)));
        assert_eq!(gradient_cyl(&f, 0.6, 2.0, 0.01).unwrap().0, Matrix3::zeros());
    }

    #[test]
    fn radial_dilation_is_diagonal() {
        let f = axisym(Profile::closed(|rho, _| Jet2::new(rho, 1.0, 0.0)), Profile::Zero, Profile::Zero);
        let g = gradient_cyl(&f, 0.9, 0.4, 0.02).unwrap();
        assert!((g.0 - Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, 0.0))).norm() < 1e-15);
        assert_eq!(g.sym(), g.0);
    }

    #[test]
    fn points_outside_are_rejected() {
        let f = axisym(Profile::Zero, Profile::Zero, Profile::Zero);
        assert!(gradient_cyl(&f, 0.4, 0.0, 0.05).is_err());
        assert!(gradient_cyl(&f, 0.7, 0.0, 0.2).is_err());
        assert!(gradient_cyl(&f, -0.7, 0.0, 0.05).is_err());
    }

    #[test]
    fn strain_is_exact_symmetrisation() {
        let mut m = ModeCoeffs::new(3);
        m.a_rho = Profile::closed(|r, z| Jet2::new(r * z, z, r));
        m.b_theta = Profile::closed(|r, z| Jet2::new(r * r - z, 2.0 * r, -1.0));
        m.a_z = Profile::closed(|r, z| Jet2::new((r + z).sin(), (r + z).cos(), (r + z).cos()));
        let f = FourierField::new(washer(), vec![m]).unwrap();
        let g = gradient_cyl(&f, 0.66, 0.9, 0.07).unwrap().0;
        let e = strain(&f, 0.66, 0.9, 0.07).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(e[(i, j)], 0.5 * (g[(i, j)] + g[(j, i)]));
                assert_eq!(e[(i, j)], e[(j, i)]);
            }
        }
    }
}
