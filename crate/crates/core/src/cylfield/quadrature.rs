//! Tensor-product quadrature on the washer cross-section and on rectangles.
//!
//! Washer integrals are written as `int weight(rho) |q|^2 drho dtheta dz` with
//! the `theta` integral done analytically per Fourier mode.

use serde::{Deserialize, Serialize};

use super::calculus::{sym, theta_weights, ModeGradient};
use super::field::{FourierField, RectField};
use super::geometry::{RectGeometry, WasherGeometry};
use crate::error::{ensure_finite, KornError, Result};

/// Radii below this are refused by `1/rho` weights.
pub const INV_WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Midpoint,
    /// Composite Gauss-Legendre with this many nodes per panel.
    Gauss(usize),
}

/// Panel counts along the two cross-section axis plus the panel rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n1: usize,
    pub n2: usize,
    pub rule: Rule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n1: 8,
            n2: 2,
            rule: Rule::Gauss(5),
        }
    }
}

impl QuadratureSpec {
    pub fn new(n1: usize, n2: usize, rule: Rule) -> Self {
        Self { n1, n2, rule }
    }

    pub fn gauss(n1: usize, n2: usize, order: usize) -> Self {
        Self::new(n1, n2, Rule::Gauss(order))
    }

    /// Twice as many panels along both axes.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.n1, 2 * self.n2, self.rule)
    }

    fn check(&self) -> Result<()> {
        let per_panel = match self.rule {
            Rule::Midpoint => 1,
            Rule::Gauss(k) => k,
        };
        if self.n1 == 0 || self.n2 == 0 || per_panel == 0 {
            return Err(KornError::EmptyQuadrature);
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n, p0 = P_{n-1}
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.reverse();
    out
}

/// Composite nodes on `[lo, hi]` with `panels` equal panels.
pub fn composite_nodes(lo: f64, hi: f64, panels: usize, rule: Rule) -> Vec<(f64, f64)> {
    let h = (hi - lo) / panels as f64;
    let base = match rule {
        Rule::Midpoint => vec![(0.0, 2.0)],
        Rule::Gauss(k) => gauss_legendre(k),
    };
    let mut out = Vec::with_capacity(panels * base.len());
    for p in 0..panels {
        let a = lo + h * p as f64;
        for &(x, w) in &base {
            out.push((a + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

/// Weight in front of `|q|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    Unit,
    Rho,
    InvRho,
    Y,
    InvY,
}

impl Weight {
    fn washer(self, rho: f64) -> Result<f64> {
        match self {
            Weight::Unit => Ok(1.0),
            Weight::Rho => Ok(rho),
            Weight::InvRho => Ok(1.0 / rho),
            Weight::Y | Weight::InvY => Err(KornError::UnsupportedPairing(
                "y-weights apply to rectangles only".into(),
            )),
        }
    }

    fn rect(self, y: f64) -> Result<f64> {
        match self {
            Weight::Unit => Ok(1.0),
            Weight::Y => Ok(y),
            Weight::InvY => Ok(1.0 / y),
            Weight::Rho | Weight::InvRho => Err(KornError::UnsupportedPairing(
                "rho-weights apply to washers only".into(),
            )),
        }
    }

    fn check_floor(self, lower: f64) -> Result<()> {
        if matches!(self, Weight::InvRho | Weight::InvY) && lower < INV_WEIGHT_FLOOR {
            return Err(KornError::InvalidArgument(format!(
                "inverse weight needs the domain to stay above {INV_WEIGHT_FLOOR:e}, got {lower}"
            )));
        }
        Ok(())
    }
}

/// `sum_{nodes} weight(rho) density(rho, z)` over the washer cross-section.
/// `density` must already contain the `theta` integral.
pub fn washer_integral(
    geom: &WasherGeometry,
    weight: Weight,
    spec: &QuadratureSpec,
    mut density: impl FnMut(f64, f64) -> f64,
) -> Result<f64> {
    spec.check()?;
    weight.check_floor(geom.inner)?;
    let rs = composite_nodes(geom.inner, geom.outer, spec.n1, spec.rule);
    let zs = composite_nodes(0.0, geom.thickness, spec.n2, spec.rule);
    let mut total = 0.0;
    for &(rho, wr) in &rs {
        let wt = weight.washer(rho)? * wr;
        let mut col = 0.0;
        for &(z, wz) in &zs {
            col += wz * density(rho, z);
        }
        total += wt * col;
    }
    ensure_finite(total, "washer quadrature")
}

/// `sum_{nodes} weight(y) density(x, y)` over the rectangle.
pub fn rect_integral(
    geom: &RectGeometry,
    weight: Weight,
    spec: &QuadratureSpec,
    mut density: impl FnMut(f64, f64) -> f64,
) -> Result<f64> {
    spec.check()?;
    weight.check_floor(geom.lower)?;
    let xs = composite_nodes(0.0, geom.width, spec.n1, spec.rule);
    let ys = composite_nodes(geom.lower, geom.upper, spec.n2, spec.rule);
    let mut total = 0.0;
    for &(y, wy) in &ys {
        let wt = weight.rect(y)? * wy;
        let mut row = 0.0;
        for &(x, wx) in &xs {
            row += wx * density(x, y);
        }
        total += wt * row;
    }
    ensure_finite(total, "rectangle quadrature")
}

/// Quantities of a washer displacement whose squared norms are available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WasherQuantity {
    Displacement,
    URho,
    UTheta,
    Uz,
    Grad,
    Strain,
    /// Third gradient row `(u_z,rho, u_z,theta / rho, u_z,z)`.
    GradUz,
    /// Single gradient entry `(row, col)`.
    Entry(usize, usize),
}

/// Quantities of a planar displacement `U = (f, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RectQuantity {
    F,
    G,
    Displacement,
    Grad,
    Strain,
    FX,
    FY,
}

/// A field together with the quantity to take the norm of.
#[derive(Debug, Clone, Copy)]
pub enum Quantity<'a> {
    Washer(&'a FourierField, WasherQuantity),
    Rect(&'a RectField, RectQuantity),
}

fn sq(v: f64) -> f64 {
    v * v
}

/// Squared coefficient norms `(|C|^2, |S|^2)` of a washer quantity for one mode.
fn mode_quantity(n: u32, jets: &super::field::ModeJets, rho: f64, q: WasherQuantity) -> (f64, f64) {
    match q {
        WasherQuantity::URho => (sq(jets.a_rho.v), sq(jets.b_rho.v)),
        WasherQuantity::UTheta => (sq(jets.a_theta.v), sq(jets.b_theta.v)),
        WasherQuantity::Uz => (sq(jets.a_z.v), sq(jets.b_z.v)),
        WasherQuantity::Displacement => (
            sq(jets.a_rho.v) + sq(jets.a_theta.v) + sq(jets.a_z.v),
            sq(jets.b_rho.v) + sq(jets.b_theta.v) + sq(jets.b_z.v),
        ),
        _ => {
            let g = ModeGradient::from_jets(n, jets, rho);
            match q {
                WasherQuantity::Grad => (g.cos.norm_squared(), g.sin.norm_squared()),
                WasherQuantity::Strain => (sym(&g.cos).norm_squared(), sym(&g.sin).norm_squared()),
                WasherQuantity::GradUz => (
                    g.cos.row(2).norm_squared(),
                    g.sin.row(2).norm_squared(),
                ),
                WasherQuantity::Entry(i, j) => (sq(g.cos[(i, j)]), sq(g.sin[(i, j)])),
                _ => unreachable!(),
            }
        }
    }
}

/// Per-mode squared norms and their total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeNorms {
    pub per_mode: Vec<(u32, f64)>,
    pub total: f64,
}

/// `int weight |q|^2` for a single mode `n` of `field`.
fn washer_mode_norm(field: &FourierField, n: u32, q: WasherQuantity, weight: Weight, spec: &QuadratureSpec) -> Result<f64> {
    let m = field
        .mode(n)
        .ok_or_else(|| KornError::InvalidArgument(format!("mode {n} not present")))?;
    if let WasherQuantity::Entry(i, j) = q {
        if i > 2 || j > 2 {
            return Err(KornError::InvalidArgument(format!("no gradient entry ({i}, {j})")));
        }
    }
    let (wc, ws) = theta_weights(n);
    washer_integral(field.geometry(), weight, spec, |rho, z| {
        let (c, s) = mode_quantity(n, &m.jets(rho, z), rho, q);
        wc * c + ws * s
    })
}

/// Squared norms of `q` mode by mode. Fourier orthogonality in `theta` makes
/// the total the sum of the per-mode values.
pub fn mode_norms(field: &FourierField, q: WasherQuantity, weight: Weight, spec: &QuadratureSpec) -> Result<ModeNorms> {
    let mut per_mode = Vec::with_capacity(field.modes().len());
    for m in field.modes() {
        per_mode.push((m.n, washer_mode_norm(field, m.n, q, weight, spec)?));
    }
    let total = per_mode.iter().map(|(_, v)| v).sum();
    Ok(ModeNorms { per_mode, total })
}

fn rect_density(field: &RectField, q: RectQuantity, x: f64, y: f64) -> f64 {
    let f = field.f.eval(x, y);
    let g = field.g.eval(x, y);
    match q {
        RectQuantity::F => sq(f.v),
        RectQuantity::G => sq(g.v),
        RectQuantity::Displacement => sq(f.v) + sq(g.v),
        RectQuantity::Grad => sq(f.d1) + sq(f.d2) + sq(g.d1) + sq(g.d2),
        RectQuantity::Strain => sq(f.d1) + sq(g.d2) + 2.0 * sq(0.5 * (f.d2 + g.d1)),
        RectQuantity::FX => sq(f.d1),
        RectQuantity::FY => sq(f.d2),
    }
}

/// Quadrature approximation of `int weight |q|^2` over the washer (with
/// `theta` over `[0, 2 pi]`) or the rectangle.
pub fn weighted_norm_sq(quantity: Quantity<'_>, weight: Weight, spec: &QuadratureSpec) -> Result<f64> {
    match quantity {
        Quantity::Washer(field, q) => Ok(mode_norms(field, q, weight, spec)?.total),
        Quantity::Rect(field, q) => rect_integral(&field.geometry, weight, spec, |x, y| rect_density(field, q, x, y)),
    }
}

/// Every washer norm the audits need, gathered in one sweep over the nodes.
/// All entries carry the `rho` weight unless the name says otherwise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct WasherNormSet {
    pub grad: f64,
    pub strain: f64,
    pub uz: f64,
    /// `int u_rho^2 / rho`.
    pub urho_inv: f64,
    /// `|| sqrt(rho) (u_rho,theta - u_theta)/rho ||^2 + || sqrt(rho) u_theta,rho ||^2`.
    pub block_z: f64,
    pub grad_uz: f64,
    /// `|| sqrt(rho) u_z,rho ||^2`.
    pub uz_rho: f64,
    /// `int rho u_z` (only the axisymmetric part contributes).
    pub uz_mean: f64,
}

impl std::ops::Add for WasherNormSet {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            grad: self.grad + o.grad,
            strain: self.strain + o.strain,
            uz: self.uz + o.uz,
            urho_inv: self.urho_inv + o.urho_inv,
            block_z: self.block_z + o.block_z,
            grad_uz: self.grad_uz + o.grad_uz,
            uz_rho: self.uz_rho + o.uz_rho,
            uz_mean: self.uz_mean + o.uz_mean,
        }
    }
}

impl WasherNormSet {
    fn values(&self) -> [f64; 8] {
        [
            self.grad,
            self.strain,
            self.uz,
            self.urho_inv,
            self.block_z,
            self.grad_uz,
            self.uz_rho,
            self.uz_mean,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }

    /// Largest relative difference between two evaluations.
    pub fn max_rel_diff(&self, other: &Self) -> f64 {
        let scale = self.grad.abs().max(other.grad.abs()).max(f64::MIN_POSITIVE);
        self.values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| {
                let s = a.abs().max(b.abs());
                if s <= 1e-14 * scale {
                    0.0
                } else {
                    (a - b).abs() / s
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Per-mode [`WasherNormSet`]s.
pub fn washer_norm_sets(field: &FourierField, spec: &QuadratureSpec) -> Result<Vec<(u32, WasherNormSet)>> {
    spec.check()?;
    let geom = field.geometry();
    Weight::InvRho.check_floor(geom.inner)?;
    let rs = composite_nodes(geom.inner, geom.outer, spec.n1, spec.rule);
    let zs = composite_nodes(0.0, geom.thickness, spec.n2, spec.rule);
    let mut out = Vec::with_capacity(field.modes().len());
    for m in field.modes() {
        let (wc, ws) = theta_weights(m.n);
        let mut acc = WasherNormSet::default();
        for &(rho, wr) in &rs {
            for &(z, wz) in &zs {
                let w = wr * wz;
                let j = m.jets(rho, z);
                let g = ModeGradient::from_jets(m.n, &j, rho);
                let both = |c: f64, s: f64| wc * c + ws * s;
                acc.grad += w * rho * both(g.cos.norm_squared(), g.sin.norm_squared());
                acc.strain += w * rho * both(sym(&g.cos).norm_squared(), sym(&g.sin).norm_squared());
                acc.uz += w * rho * both(sq(j.a_z.v), sq(j.b_z.v));
                acc.urho_inv += w / rho * both(sq(j.a_rho.v), sq(j.b_rho.v));
                acc.block_z += w
                    * rho
                    * both(
                        sq(g.cos[(0, 1)]) + sq(g.cos[(1, 0)]),
                        sq(g.sin[(0, 1)]) + sq(g.sin[(1, 0)]),
                    );
                acc.grad_uz += w * rho * both(g.cos.row(2).norm_squared(), g.sin.row(2).norm_squared());
                acc.uz_rho += w * rho * both(sq(g.cos[(2, 0)]), sq(g.sin[(2, 0)]));
                if m.n == 0 {
                    acc.uz_mean += w * rho * 2.0 * std::f64::consts::PI * j.a_z.v;
                }
            }
        }
        if !acc.is_finite() {
            return Err(KornError::NonFinite(format!("norms of mode {}", m.n)));
        }
        out.push((m.n, acc));
    }
    Ok(out)
}

/// Sum of [`washer_norm_sets`].
pub fn washer_norm_set(field: &FourierField, spec: &QuadratureSpec) -> Result<WasherNormSet> {
    Ok(washer_norm_sets(field, spec)?
        .into_iter()
        .fold(WasherNormSet::default(), |a, (_, b)| a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylfield::{Jet2, ModeCoeffs, Profile};
    use std::f64::consts::PI;

    fn washer() -> WasherGeometry {
        WasherGeometry::new(0.5, 1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        for n in 1..=10 {
            let nodes = gauss_legendre(n);
            let wsum: f64 = nodes.iter().map(|(_, w)| w).sum();
            assert!((wsum - 2.0).abs() < 1e-14, "n={n}");
            let deg = 2 * n - 1;
            let integral: f64 = nodes.iter().map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((integral - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn constant_field_integrates_to_weighted_volume() {
        let mut m = ModeCoeffs::new(0);
        m.a_z = Profile::closed(|_, _| Jet2::new(1.0, 0.0, 0.0));
        let f = FourierField::new(washer(), vec![m]).unwrap();
        let v = weighted_norm_sq(Quantity::Washer(&f, WasherQuantity::Uz), Weight::Rho, &QuadratureSpec::default()).unwrap();
        assert!((v - 0.075 * PI).abs() < 1e-14);
        assert!((v - 0.235619).abs() < 1e-6);
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let f = FourierField::new(washer(), vec![ModeCoeffs::new(3)]).unwrap();
        for q in [WasherQuantity::Grad, WasherQuantity::Strain, WasherQuantity::Uz] {
            assert_eq!(weighted_norm_sq(Quantity::Washer(&f, q), Weight::Rho, &QuadratureSpec::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn mode_one_radial_field_matches_closed_form() {
        // u_rho = rho cos(theta); int rho * rho^2 cos^2 = pi h (R^4 - r^4) / 4
        let mut m = ModeCoeffs::new(1);
        m.a_rho = Profile::closed(|rho, _| Jet2::new(rho, 1.0, 0.0));
        let f = FourierField::new(washer(), vec![m]).unwrap();
        let v = weighted_norm_sq(Quantity::Washer(&f, WasherQuantity::URho), Weight::Rho, &QuadratureSpec::default()).unwrap();
        let exact = PI * 0.1 * (1.0 - 0.5f64.powi(4)) / 4.0;
        assert!((v - exact).abs() < 1e-14 * exact.max(1.0));
        assert!((v - 0.0736).abs() < 1e-4);
    }

    #[test]
    fn two_modes_add() {
        let mut m0 = ModeCoeffs::new(0);
        m0.a_rho = Profile::closed(|rho, z| Jet2::new(rho * z, z, rho));
        let mut m2 = ModeCoeffs::new(2);
        m2.b_theta = Profile::closed(|rho, z| Jet2::new(rho - z * z, 1.0, -2.0 * z));
        let g = washer();
        let both = FourierField::new(g, vec![m0.clone(), m2.clone()]).unwrap();
        let spec = QuadratureSpec::default();
        let norms = mode_norms(&both, WasherQuantity::Grad, Weight::Rho, &spec).unwrap();
        let a = weighted_norm_sq(Quantity::Washer(&FourierField::new(g, vec![m0]).unwrap(), WasherQuantity::Grad), Weight::Rho, &spec).unwrap();
        let b = weighted_norm_sq(Quantity::Washer(&FourierField::new(g, vec![m2]).unwrap(), WasherQuantity::Grad), Weight::Rho, &spec).unwrap();
        assert_eq!(norms.per_mode, vec![(0, a), (2, b)]);
        assert_eq!(norms.total, a + b);
    }

    #[test]
    fn weights_must_match_domain() {
        let f = FourierField::new(washer(), vec![ModeCoeffs::new(0)]).unwrap();
        assert!(weighted_norm_sq(Quantity::Washer(&f, WasherQuantity::Uz), Weight::Y, &QuadratureSpec::default()).is_err());
        assert!(weighted_norm_sq(Quantity::Washer(&f, WasherQuantity::Uz), Weight::Rho, &QuadratureSpec::new(0, 2, Rule::Midpoint)).is_err());
    }

    #[test]
    fn norm_set_matches_individual_norms() {
        let mut m = ModeCoeffs::new(2);
        m.a_rho = Profile::closed(|rho, z| Jet2::new(rho * z + 0.3, z, rho));
        m.b_theta = Profile::closed(|rho, z| Jet2::new(rho * rho * z, 2.0 * rho * z, rho * rho));
        m.a_z = Profile::closed(|rho, z| Jet2::new((rho * 3.0).sin() + z, 3.0 * (rho * 3.0).cos(), 1.0));
        let f = FourierField::new(washer(), vec![m]).unwrap();
        let spec = QuadratureSpec::default();
        let set = washer_norm_set(&f, &spec).unwrap();
        let n = |q, w| weighted_norm_sq(Quantity::Washer(&f, q), w, &spec).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        assert!(close(set.grad, n(WasherQuantity::Grad, Weight::Rho)));
        assert!(close(set.strain, n(WasherQuantity::Strain, Weight::Rho)));
        assert!(close(set.uz, n(WasherQuantity::Uz, Weight::Rho)));
        assert!(close(set.urho_inv, n(WasherQuantity::URho, Weight::InvRho)));
        assert!(close(set.grad_uz, n(WasherQuantity::GradUz, Weight::Rho)));
        assert!(close(set.uz_rho, n(WasherQuantity::Entry(2, 0), Weight::Rho)));
        assert!(close(
            set.block_z,
            n(WasherQuantity::Entry(0, 1), Weight::Rho) + n(WasherQuantity::Entry(1, 0), Weight::Rho)
        ));
    }
}
