//! Scalar coefficient functions of two variables together with their first
//! derivatives. Washer profiles live on the `(rho, z)` cross-section,
//! rectangle profiles on `(x, y)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};

/// Value and first partial derivatives at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    /// Derivative along the first coordinate (`rho` or `x`).
    pub d1: f64,
    /// Derivative along the second coordinate (`z` or `y`).
    pub d2: f64,
}

impl Jet2 {
    pub const ZERO: Jet2 = Jet2 { v: 0.0, d1: 0.0, d2: 0.0 };

    pub fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, d1, d2 }
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.v * s, self.d1 * s, self.d2 * s)
    }
}

impl std::ops::Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

/// Shifted Legendre polynomials on `[0, 1]` and their derivatives, degrees `0..=deg`.
pub fn shifted_legendre(s: f64, deg: usize, p: &mut Vec<f64>, dp: &mut Vec<f64>) {
    p.clear();
    dp.clear();
    let x = 2.0 * s - 1.0;
    p.push(1.0);
    dp.push(0.0);
    if deg >= 1 {
        p.push(x);
        dp.push(1.0);
    }
    for k in 1..deg {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        let dnext = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
        p.push(next);
        dp.push(dnext);
    }
    // d/ds = 2 d/dx
    for d in dp.iter_mut() {
        *d *= 2.0;
    }
}

/// How a polynomial basis treats the ends of its interval. The vanishing
/// variants multiply every basis function by a factor that is exactly zero at
/// the constrained end(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndCondition {
    Free,
    ZeroLow,
    ZeroHigh,
    ZeroBoth,
    /// Values at both ends coincide: `{1} U { s(1-s) P_j(s) }`.
    EqualEnds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub end: EndCondition,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, end: EndCondition) -> Self {
        Self { lo, hi, end }
    }

    /// Basis values and derivatives (with respect to the physical coordinate).
    fn basis(&self, coord: f64, deg: usize, b: &mut Vec<f64>, db: &mut Vec<f64>) {
        let len = self.hi - self.lo;
        let s = if coord == self.hi { 1.0 } else { (coord - self.lo) / len };
        let mut p = Vec::with_capacity(deg + 1);
        let mut dp = Vec::with_capacity(deg + 1);
        shifted_legendre(s, deg, &mut p, &mut dp);
        b.clear();
        db.clear();
        match self.end {
            EndCondition::EqualEnds => {
                b.push(1.0);
                db.push(0.0);
                let m = s * (1.0 - s);
                let dm = 1.0 - 2.0 * s;
                for j in 0..deg {
                    b.push(m * p[j]);
                    db.push(dm * p[j] + m * dp[j]);
                }
            }
            end => {
                let (m, dm) = match end {
                    EndCondition::Free => (1.0, 0.0),
                    EndCondition::ZeroLow => (s, 1.0),
                    EndCondition::ZeroHigh => (1.0 - s, -1.0),
                    EndCondition::ZeroBoth => (s * (1.0 - s), 1.0 - 2.0 * s),
                    EndCondition::EqualEnds => unreachable!(),
                };
                for j in 0..=deg {
                    b.push(m * p[j]);
                    db.push(dm * p[j] + m * dp[j]);
                }
            }
        }
        for d in db.iter_mut() {
            *d /= len;
        }
    }
}

/// Tensor-product polynomial `sum c_ij B_i(a) C_j(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyProfile {
    pub first: Axis,
    pub second: Axis,
    pub deg1: usize,
    pub deg2: usize,
    /// Row-major `(deg1 + 1) x (deg2 + 1)`.
    pub coeffs: Vec<f64>,
}

impl PolyProfile {
    pub fn new(first: Axis, second: Axis, deg1: usize, deg2: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != (deg1 + 1) * (deg2 + 1) {
            return Err(KornError::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                (deg1 + 1) * (deg2 + 1),
                coeffs.len()
            )));
        }
        Ok(Self {
            first,
            second,
            deg1,
            deg2,
            coeffs,
        })
    }

    pub fn eval(&self, a: f64, b: f64) -> Jet2 {
        let mut ba = Vec::with_capacity(self.deg1 + 1);
        let mut dba = Vec::with_capacity(self.deg1 + 1);
        let mut bb = Vec::with_capacity(self.deg2 + 1);
        let mut dbb = Vec::with_capacity(self.deg2 + 1);
        self.first.basis(a, self.deg1, &mut ba, &mut dba);
        self.second.basis(b, self.deg2, &mut bb, &mut dbb);
        let n2 = self.deg2 + 1;
        let mut out = Jet2::ZERO;
        for i in 0..=self.deg1 {
            let row = &self.coeffs[i * n2..(i + 1) * n2];
            let mut rv = 0.0;
            let mut rd = 0.0;
            for j in 0..n2 {
                rv += row[j] * bb[j];
                rd += row[j] * dbb[j];
            }
            out.v += ba[i] * rv;
            out.d1 += dba[i] * rv;
            out.d2 += ba[i] * rd;
        }
        out
    }
}

/// Values on a uniform tensor grid. Derivatives come from second-order
/// finite differences (centred inside, one-sided on the boundary); off-node
/// evaluation interpolates values and differences bilinearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSamples {
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    /// Cells along each axis (nodes = cells + 1).
    pub n1: usize,
    pub n2: usize,
    /// Row-major, first index slowest.
    pub values: Vec<f64>,
    #[serde(skip)]
    d1: Vec<f64>,
    #[serde(skip)]
    d2: Vec<f64>,
}

fn fd_axis(vals: impl Fn(usize) -> f64, n: usize, step: f64, out: &mut [f64]) {
    // n = number of nodes
    if n == 2 {
        let d = (vals(1) - vals(0)) / step;
        out[0] = d;
        out[1] = d;
        return;
    }
    out[0] = (-3.0 * vals(0) + 4.0 * vals(1) - vals(2)) / (2.0 * step);
    out[n - 1] = (3.0 * vals(n - 1) - 4.0 * vals(n - 2) + vals(n - 3)) / (2.0 * step);
    for i in 1..n - 1 {
        out[i] = (vals(i + 1) - vals(i - 1)) / (2.0 * step);
    }
}

impl GridSamples {
    pub fn new(a: (f64, f64), b: (f64, f64), n1: usize, n2: usize, values: Vec<f64>) -> Result<Self> {
        if n1 < 1 || n2 < 1 {
            return Err(KornError::InvalidArgument("sample grid needs at least one cell per axis".into()));
        }
        if values.len() != (n1 + 1) * (n2 + 1) {
            return Err(KornError::InvalidArgument(format!(
                "expected {} samples, got {}",
                (n1 + 1) * (n2 + 1),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(KornError::NonFinite(format!("grid sample {bad}")));
        }
        let mut g = Self {
            a0: a.0,
            a1: a.1,
            b0: b.0,
            b1: b.1,
            n1,
            n2,
            values,
            d1: Vec::new(),
            d2: Vec::new(),
        };
        g.differentiate();
        Ok(g)
    }

    /// Sample `f` at the grid nodes.
    pub fn from_fn(a: (f64, f64), b: (f64, f64), n1: usize, n2: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity((n1 + 1) * (n2 + 1));
        for i in 0..=n1 {
            let x = node(a.0, a.1, n1, i);
            for j in 0..=n2 {
                values.push(f(x, node(b.0, b.1, n2, j)));
            }
        }
        Self::new(a, b, n1, n2, values)
    }

    fn differentiate(&mut self) {
        let (m1, m2) = (self.n1 + 1, self.n2 + 1);
        let h1 = (self.a1 - self.a0) / self.n1 as f64;
        let h2 = (self.b1 - self.b0) / self.n2 as f64;
        let mut d1 = vec![0.0; m1 * m2];
        let mut d2 = vec![0.0; m1 * m2];
        let mut col = vec![0.0; m1];
        for j in 0..m2 {
            fd_axis(|i| self.values[i * m2 + j], m1, h1, &mut col);
            for i in 0..m1 {
                d1[i * m2 + j] = col[i];
            }
        }
        let mut row = vec![0.0; m2];
        for i in 0..m1 {
            fd_axis(|j| self.values[i * m2 + j], m2, h2, &mut row);
            d2[i * m2..(i + 1) * m2].copy_from_slice(&row);
        }
        self.d1 = d1;
        self.d2 = d2;
    }

    /// Rebuild derivative tables after deserialisation.
    pub fn refresh(&mut self) {
        self.differentiate();
    }

    pub fn node_a(&self, i: usize) -> f64 {
        node(self.a0, self.a1, self.n1, i)
    }

    pub fn node_b(&self, j: usize) -> f64 {
        node(self.b0, self.b1, self.n2, j)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.n2 + 1) + j]
    }

    /// Node jet: the stored value and its finite-difference derivatives.
    pub fn jet_at(&self, i: usize, j: usize) -> Jet2 {
        let k = i * (self.n2 + 1) + j;
        Jet2::new(self.values[k], self.d1[k], self.d2[k])
    }

    fn locate(lo: f64, hi: f64, n: usize, x: f64) -> (usize, f64) {
        let t = ((x - lo) / (hi - lo) * n as f64).clamp(0.0, n as f64);
        let i = (t.floor() as usize).min(n - 1);
        (i, t - i as f64)
    }

    pub fn eval(&self, a: f64, b: f64) -> Jet2 {
        let (i, s) = Self::locate(self.a0, self.a1, self.n1, a);
        let (j, t) = Self::locate(self.b0, self.b1, self.n2, b);
        let m2 = self.n2 + 1;
        let k00 = i * m2 + j;
        let k01 = k00 + 1;
        let k10 = k00 + m2;
        let k11 = k10 + 1;
        let lerp = |arr: &[f64]| {
            (1.0 - s) * ((1.0 - t) * arr[k00] + t * arr[k01]) + s * ((1.0 - t) * arr[k10] + t * arr[k11])
        };
        Jet2::new(lerp(&self.values), lerp(&self.d1), lerp(&self.d2))
    }
}

pub(crate) fn node(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / n as f64
    }
}

pub type ClosedForm = Arc<dyn Fn(f64, f64) -> Jet2 + Send + Sync>;

/// A coefficient function.
#[derive(Clone, Default)]
pub enum Profile {
    #[default]
    Zero,
    Poly(Arc<PolyProfile>),
    Closed(ClosedForm),
    Sampled(Arc<GridSamples>),
}

impl Profile {
    pub fn closed(f: impl Fn(f64, f64) -> Jet2 + Send + Sync + 'static) -> Self {
        Profile::Closed(Arc::new(f))
    }

    pub fn eval(&self, a: f64, b: f64) -> Jet2 {
        match self {
            Profile::Zero => Jet2::ZERO,
            Profile::Poly(p) => p.eval(a, b),
            Profile::Closed(f) => f(a, b),
            Profile::Sampled(g) => g.eval(a, b),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Profile::Zero)
    }
}

impl PartialEq for Profile {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Profile::Zero, Profile::Zero) => true,
            (Profile::Poly(a), Profile::Poly(b)) => a == b,
            (Profile::Sampled(a), Profile::Sampled(b)) => a == b,
            (Profile::Closed(a), Profile::Closed(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => f.write_str("Zero"),
            Profile::Poly(p) => f.debug_tuple("Poly").field(p).finish(),
            Profile::Closed(_) => f.write_str("Closed(..)"),
            Profile::Sampled(g) => write!(f, "Sampled({}x{})", g.n1, g.n2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_matches_closed_forms() {
        let mut p = Vec::new();
        let mut dp = Vec::new();
        for &s in &[0.0, 0.3, 0.71, 1.0] {
            shifted_legendre(s, 3, &mut p, &mut dp);
            let x: f64 = 2.0 * s - 1.0;
            assert!((p[2] - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-14);
            assert!((p[3] - 0.5 * (5.0 * x.powi(3) - 3.0 * x)).abs() < 1e-14);
            assert!((dp[3] - 2.0 * 0.5 * (15.0 * x * x - 3.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn poly_profile_vanishes_exactly_at_constrained_ends() {
        let coeffs: Vec<f64> = (0..12).map(|k| 0.37 * k as f64 - 1.1).collect();
        let p = PolyProfile::new(
            Axis::new(0.5, 1.0, EndCondition::ZeroBoth),
            Axis::new(0.0, 0.1, EndCondition::Free),
            3,
            2,
            coeffs,
        )
        .unwrap();
        for &z in &[0.0, 0.03, 0.1] {
            assert_eq!(p.eval(0.5, z).v, 0.0);
            assert_eq!(p.eval(1.0, z).v, 0.0);
        }
    }

    #[test]
    fn equal_ends_basis_matches_at_both_ends() {
        let coeffs: Vec<f64> = (0..16).map(|k| (k as f64).sin()).collect();
        let p = PolyProfile::new(
            Axis::new(0.0, 0.2, EndCondition::Free),
            Axis::new(0.0, 1.0, EndCondition::EqualEnds),
            3,
            3,
            coeffs,
        )
        .unwrap();
        for &x in &[0.0, 0.05, 0.2] {
            assert_eq!(p.eval(x, 0.0).v, p.eval(x, 1.0).v);
        }
    }

    #[test]
    fn poly_derivatives_match_finite_differences() {
        let coeffs: Vec<f64> = (0..20).map(|k| ((k * 7 % 5) as f64) - 2.0).collect();
        let p = PolyProfile::new(
            Axis::new(0.5, 1.0, EndCondition::ZeroLow),
            Axis::new(0.0, 0.1, EndCondition::ZeroHigh),
            3,
            4,
            coeffs,
        )
        .unwrap();
        let (a, b) = (0.77, 0.043);
        let j = p.eval(a, b);
        let e = 1e-6;
        let fd1 = (p.eval(a + e, b).v - p.eval(a - e, b).v) / (2.0 * e);
        let fd2 = (p.eval(a, b + e).v - p.eval(a, b - e).v) / (2.0 * e);
        assert!((j.d1 - fd1).abs() < 1e-6 * (1.0 + fd1.abs()));
        assert!((j.d2 - fd2).abs() < 1e-5 * (1.0 + fd2.abs()));
    }

    #[test]
    fn sampled_quadratic_has_exact_differences() {
        // Second-order differences are exact on quadratics.
        let g = GridSamples::from_fn((0.0, 1.0), (0.0, 2.0), 8, 6, |a, b| a * a + 3.0 * a * b - b * b).unwrap();
        for i in 0..=8 {
            for j in 0..=6 {
                let (a, b) = (g.node_a(i), g.node_b(j));
                let jet = g.jet_at(i, j);
                assert!((jet.d1 - (2.0 * a + 3.0 * b)).abs() < 1e-12);
                assert!((jet.d2 - (3.0 * a - 2.0 * b)).abs() < 1e-12);
            }
        }
        assert!(GridSamples::new((0.0, 1.0), (0.0, 1.0), 2, 2, vec![0.0; 8]).is_err());
    }
}
