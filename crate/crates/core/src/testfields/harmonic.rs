use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::cylfield::{composite_nodes, GridSamples, Jet2, Profile, RectField, RectGeometry, Rule};
use crate::error::{KornError, Result};
use crate::linalg::{conjugate_gradient, SymBand};

/// Largest Dirichlet system solved by banded Cholesky; beyond it CG is used.
pub const DIRECT_SOLVE_LIMIT: usize = 100_000;
/// Target relative residual of the Dirichlet solve.
pub const DIRICHLET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub k: u32,
    pub a: f64,
    pub b: f64,
}

/// `f(x,y) = sum_k [a_k cosh(k pi x / (L-l)) + b_k sinh(k pi x / (L-l))] sin(k pi (y-l) / (L-l))`.
/// Harmonic, and zero on `y = l` and `y = L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicRectField {
    pub geometry: RectGeometry,
    pub terms: Vec<HarmonicTerm>,
}

pub fn harmonic_field(geometry: RectGeometry, terms: Vec<HarmonicTerm>) -> Result<HarmonicRectField> {
    geometry.validate()?;
    if terms.iter().any(|t| t.k == 0) {
        return Err(KornError::InvalidArgument("harmonic terms need k >= 1".into()));
    }
    if terms.iter().any(|t| !(t.a.is_finite() && t.b.is_finite())) {
        return Err(KornError::NonFinite("harmonic coefficients".into()));
    }
    if terms.iter().all(|t| t.a == 0.0 && t.b == 0.0) {
        return Err(KornError::Degenerate("all harmonic coefficients are zero".into()));
    }
    Ok(HarmonicRectField { geometry, terms })
}

/// Random harmonic field with `terms` modes `k = 1..=terms`, coefficients
/// uniform in `[-1, 1]` scaled by `decay^(k-1)`.
pub fn random_harmonic_field(seed: u64, geometry: RectGeometry, terms: usize, decay: f64) -> Result<HarmonicRectField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (1..=terms as u32)
        .map(|k| {
            let s = decay.powi(k as i32 - 1);
            HarmonicTerm {
                k,
                a: rng.random_range(-1.0..1.0) * s,
                b: rng.random_range(-1.0..1.0) * s,
            }
        })
        .collect();
    harmonic_field(geometry, terms)
}

impl HarmonicRectField {
    fn wavenumber(&self, k: u32) -> f64 {
        k as f64 * PI / self.geometry.length()
    }

    /// `(f, f_x, f_y)`.
    pub fn eval(&self, x: f64, y: f64) -> Jet2 {
        let mut out = Jet2::ZERO;
        for t in &self.terms {
            let w = self.wavenumber(t.k);
            let (sx, cx) = ((w * x).sinh(), (w * x).cosh());
            let (sy, cy) = (w * (y - self.geometry.lower)).sin_cos();
            let xpart = t.a * cx + t.b * sx;
            let dxpart = w * (t.a * sx + t.b * cx);
            out.v += xpart * sy;
            out.d1 += dxpart * sy;
            out.d2 += xpart * w * cy;
        }
        out
    }

    /// `f_xx + f_yy` from the closed-form second derivatives.
    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        let mut fxx = 0.0;
        let mut fyy = 0.0;
        for t in &self.terms {
            let w = self.wavenumber(t.k);
            let xpart = t.a * (w * x).cosh() + t.b * (w * x).sinh();
            let sy = (w * (y - self.geometry.lower)).sin();
            fxx += w * w * xpart * sy;
            fyy -= w * w * xpart * sy;
        }
        fxx + fyy
    }

    /// As a planar displacement `U = (f, 0)`.
    pub fn to_rect_field(&self) -> RectField {
        let me = self.clone();
        RectField {
            geometry: self.geometry,
            f: Profile::closed(move |x, y| me.eval(x, y)),
            g: Profile::Zero,
            bc: Some(crate::cylfield::BoundaryCondition::RectFZero),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DirichletSolver {
    Banded,
    ConjugateGradient { iterations: usize },
}

/// Discrete harmonic part `s` of a sampled `f` and the remainder `f - s`.
#[derive(Debug, Clone)]
pub struct HarmonicPart {
    pub f: GridSamples,
    pub s: GridSamples,
    pub remainder: GridSamples,
    /// `max |Delta_h s|` at interior nodes over `(2/dx^2 + 2/dy^2) max|f|`.
    pub residual: f64,
    pub solver: DirichletSolver,
}

/// Samples `field.f` on an `nx x ny`-cell grid and computes its harmonic part.
pub fn harmonic_part(field: &RectField, nx: usize, ny: usize) -> Result<HarmonicPart> {
    let g = &field.geometry;
    let f = GridSamples::from_fn((0.0, g.width), (g.lower, g.upper), nx, ny, |x, y| field.f.eval(x, y).v)?;
    harmonic_part_of(&f)
}

/// Solves the 5-point Dirichlet problem `Delta_h s = 0` inside, `s = f` on
/// the boundary of the sample grid.
pub fn harmonic_part_of(f: &GridSamples) -> Result<HarmonicPart> {
    let (nx, ny) = (f.n1, f.n2);
    if nx < 2 || ny < 2 {
        return Err(KornError::InvalidArgument("Dirichlet grid needs at least 2 x 2 cells".into()));
    }
    let dx = (f.a1 - f.a0) / nx as f64;
    let dy = (f.b1 - f.b0) / ny as f64;
    let (cx, cy) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let (mx, my) = (nx - 1, ny - 1);
    // The shorter interior dimension runs fastest to keep the band narrow.
    let y_fast = my <= mx;
    let unknown = |i: usize, j: usize| -> usize {
        if y_fast {
            (i - 1) * my + (j - 1)
        } else {
            (j - 1) * mx + (i - 1)
        }
    };
    let n = mx * my;
    let bw = if y_fast { my } else { mx };
    let interior = |i: usize, j: usize| i > 0 && i < nx && j > 0 && j < ny;

    let mut rhs = vec![0.0; n];
    let diag_val = 2.0 * cx + 2.0 * cy;
    let mut a = (n <= DIRECT_SOLVE_LIMIT).then(|| SymBand::zeros(n, bw));
    for i in 1..nx {
        for j in 1..ny {
            let p = unknown(i, j);
            if let Some(a) = a.as_mut() {
                a.add(p, p, diag_val);
            }
            for (ni, nj, c) in [(i - 1, j, cx), (i + 1, j, cx), (i, j - 1, cy), (i, j + 1, cy)] {
                if interior(ni, nj) {
                    let q = unknown(ni, nj);
                    if q < p {
                        if let Some(a) = a.as_mut() {
                            a.add(p, q, -c);
                        }
                    }
                } else {
                    rhs[p] += c * f.at(ni, nj);
                }
            }
        }
    }
    let apply = |u: &[f64], out: &mut [f64]| {
        for i in 1..nx {
            for j in 1..ny {
                let p = unknown(i, j);
                let mut v = diag_val * u[p];
                for (ni, nj, c) in [(i - 1, j, cx), (i + 1, j, cx), (i, j - 1, cy), (i, j + 1, cy)] {
                    if interior(ni, nj) {
                        v -= c * u[unknown(ni, nj)];
                    }
                }
                out[p] = v;
            }
        }
    };
    let (u, solver) = match a {
        Some(a) => (a.cholesky()?.solve(&rhs), DirichletSolver::Banded),
        None => {
            let sol = conjugate_gradient(apply, &vec![diag_val; n], &rhs, 1e-14, 50 * (nx + ny) * 10)?;
            (sol.x, DirichletSolver::ConjugateGradient { iterations: sol.iterations })
        }
    };
    let mut au = vec![0.0; n];
    apply(&u, &mut au);
    let fmax = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = diag_val * fmax;
    let worst = au.iter().zip(&rhs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let residual = if scale > 0.0 { worst / scale } else { worst };
    if residual > DIRICHLET_TOL {
        return Err(KornError::SolverNonConvergence { residual });
    }

    let mut s_vals = f.values.clone();
    for i in 1..nx {
        for j in 1..ny {
            s_vals[i * (ny + 1) + j] = u[unknown(i, j)];
        }
    }
    let r_vals: Vec<f64> = f.values.iter().zip(&s_vals).map(|(a, b)| a - b).collect();
    let span = ((f.a0, f.a1), (f.b0, f.b1));
    Ok(HarmonicPart {
        f: f.clone(),
        s: GridSamples::new(span.0, span.1, nx, ny, s_vals)?,
        remainder: GridSamples::new(span.0, span.1, nx, ny, r_vals)?,
        residual,
        solver,
    })
}

/// `(int y v^2, int y |grad v|^2)` for the bilinear interpolant of the
/// samples, integrated exactly with 2 x 2 Gauss points per cell.
pub fn bilinear_y_norms(g: &GridSamples) -> (f64, f64) {
    let dx = (g.a1 - g.a0) / g.n1 as f64;
    let dy = (g.b1 - g.b0) / g.n2 as f64;
    let gauss = composite_nodes(0.0, 1.0, 1, Rule::Gauss(2));
    let mut val = 0.0;
    let mut grad = 0.0;
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            let (v00, v01, v10, v11) = (g.at(i, j), g.at(i, j + 1), g.at(i + 1, j), g.at(i + 1, j + 1));
            let y0 = g.node_b(j);
            for &(s, ws) in &gauss {
                for &(t, wt) in &gauss {
                    let y = y0 + t * dy;
                    let v = (1.0 - s) * ((1.0 - t) * v00 + t * v01) + s * ((1.0 - t) * v10 + t * v11);
                    let vx = ((1.0 - t) * (v10 - v00) + t * (v11 - v01)) / dx;
                    let vy = ((1.0 - s) * (v01 - v00) + s * (v11 - v10)) / dy;
                    let w = ws * wt * dx * dy * y;
                    val += w * v * v;
                    grad += w * (vx * vx + vy * vy);
                }
            }
        }
    }
    (val, grad)
}

/// Both sides of `||sqrt(y)(f-s)|| <= h ||sqrt(y) grad(f-s)||` on the
/// bilinear interpolant of the remainder.
pub fn remainder_poincare(part: &HarmonicPart) -> (f64, f64) {
    let (val, grad) = bilinear_y_norms(&part.remainder);
    let h = part.remainder.a1 - part.remainder.a0;
    (val.sqrt(), h * grad.sqrt())
}

impl HarmonicPart {
    pub fn into_profiles(self) -> (Profile, Profile) {
        (Profile::Sampled(Arc::new(self.s)), Profile::Sampled(Arc::new(self.remainder)))
    }
}
