use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::forms::{assemble, FormMatrices, Grid};
use crate::cylfield::{BoundaryCondition, WasherGeometry};
use crate::error::{KornError, Result};
use crate::linalg::{smallest_eigenpairs, Eigenpair, PencilOptions, SymBand};

/// Default Fourier cutoff.
pub const DEFAULT_MODE_CUTOFF: u32 = 8;
/// The cutoff is never extended past this.
pub const MAX_MODE_CUTOFF: u32 = 64;
/// Relative change allowed between the two finest grids.
pub const GRID_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayleighMin {
    pub lambda: f64,
    pub vector: Vec<f64>,
    /// `||A x - lambda B x|| / ||B x||`.
    pub residual: f64,
}

/// Smallest generalized eigenvalue of `(A, B)`, i.e. `min x'Ax / x'Bx`.
pub fn min_rayleigh(a: &SymBand, b: &SymBand) -> Result<RayleighMin> {
    let sol = smallest_eigenpairs(a, b, 1, &PencilOptions::default())?;
    let Eigenpair { value, vector, residual } = sol.pairs.into_iter().next().expect("one pair requested");
    Ok(RayleighMin {
        lambda: value,
        vector,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeValue {
    pub n: u32,
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KornResult {
    /// `min_n min_x ||sqrt(rho) e||^2 / ||sqrt(rho) grad||^2`.
    pub k: f64,
    pub mode: u32,
    /// Minimizer in the reduced DOFs of `mode`.
    #[serde(skip)]
    pub vector: Vec<f64>,
    pub residual: f64,
    pub per_mode: Vec<ModeValue>,
    /// Largest mode that was examined.
    pub cutoff: u32,
    pub grid: Grid,
}

fn task_err(key: String) -> impl Fn(KornError) -> KornError {
    move |e| KornError::Task {
        key: key.clone(),
        source: Box::new(e),
    }
}

fn solve_modes(geom: &WasherGeometry, bc: BoundaryCondition, modes: &[u32], grid: Grid) -> Result<Vec<(ModeValue, Vec<f64>)>> {
    modes
        .par_iter()
        .map(|&n| {
            let fm = assemble(geom, n, bc, grid).map_err(task_err(format!("h={} mode={n}", geom.thickness)))?;
            let r = min_rayleigh(&fm.a, &fm.b).map_err(task_err(format!("h={} mode={n}", geom.thickness)))?;
            Ok((
                ModeValue {
                    n,
                    value: r.lambda,
                    residual: r.residual,
                },
                r.vector,
            ))
        })
        .collect()
}

fn pick(all: Vec<(ModeValue, Vec<f64>)>, cutoff: u32, grid: Grid) -> KornResult {
    let best = all
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.value.total_cmp(&b.1 .0.value))
        .map(|(i, _)| i)
        .expect("at least one mode");
    let per_mode = all.iter().map(|(m, _)| *m).collect();
    let (m, v) = all.into_iter().nth(best).expect("index in range");
    KornResult {
        k: m.value,
        mode: m.n,
        vector: v,
        residual: m.residual,
        per_mode,
        cutoff,
        grid,
    }
}

/// Korn constant over modes `0..=cutoff` exactly (no extension).
pub fn korn_constant_fixed(geom: &WasherGeometry, bc: BoundaryCondition, cutoff: u32, grid: Grid) -> Result<KornResult> {
    let modes: Vec<u32> = (0..=cutoff).collect();
    Ok(pick(solve_modes(geom, bc, &modes, grid)?, cutoff, grid))
}

/// Korn constant over modes `0..=cutoff`; while the minimizing mode sits at
/// the cutoff, four more modes are added (up to [`MAX_MODE_CUTOFF`]).
pub fn korn_constant(geom: &WasherGeometry, bc: BoundaryCondition, cutoff: u32, grid: Grid) -> Result<KornResult> {
    let modes: Vec<u32> = (0..=cutoff).collect();
    let mut all = solve_modes(geom, bc, &modes, grid)?;
    let mut top = cutoff;
    loop {
        let arg = all
            .iter()
            .min_by(|a, b| a.0.value.total_cmp(&b.0.value))
            .map(|(m, _)| m.n)
            .expect("nonempty");
        if arg < top || top >= MAX_MODE_CUTOFF {
            break;
        }
        let next = (top + 4).min(MAX_MODE_CUTOFF);
        let extra: Vec<u32> = (top + 1..=next).collect();
        all.extend(solve_modes(geom, bc, &extra, grid)?);
        top = next;
    }
    Ok(pick(all, top, grid))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridLevel {
    pub grid: Grid,
    pub k: f64,
    pub mode: u32,
    pub residual: f64,
}

/// Korn constant on a refinement ladder with its convergence verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergedKorn {
    pub levels: Vec<GridLevel>,
    /// Value on the finest grid.
    pub k: f64,
    pub mode: u32,
    /// `|K_finest - K_previous| / K_finest`.
    pub rel_change: f64,
    /// `rel_change <= GRID_TOL`.
    pub converged: bool,
    pub finest: KornResult,
}

/// Runs [`korn_constant`] on `grids` (coarse to fine) and compares the two
/// finest levels. The cutoff found on the first level is reused.
pub fn korn_constant_on_ladder(
    geom: &WasherGeometry,
    bc: BoundaryCondition,
    cutoff: u32,
    grids: &[Grid],
) -> Result<ConvergedKorn> {
    if grids.len() < 2 {
        return Err(KornError::InvalidArgument("a convergence check needs at least two grids".into()));
    }
    let mut levels = Vec::with_capacity(grids.len());
    let mut last = None;
    let mut cut = cutoff;
    for &g in grids {
        let r = korn_constant(geom, bc, cut, g)?;
        cut = cut.max(r.cutoff);
        levels.push(GridLevel {
            grid: g,
            k: r.k,
            mode: r.mode,
            residual: r.residual,
        });
        last = Some(r);
    }
    let finest = last.expect("at least two grids");
    let prev = levels[levels.len() - 2].k;
    let rel_change = (finest.k - prev).abs() / finest.k.abs();
    Ok(ConvergedKorn {
        k: finest.k,
        mode: finest.mode,
        rel_change,
        converged: rel_change <= GRID_TOL,
        levels,
        finest,
    })
}

/// Ladder `base, 2 base, 4 base` (or `levels` doublings).
pub fn refinement_ladder(base: Grid, levels: usize) -> Vec<Grid> {
    let mut out = vec![base];
    for _ in 1..levels {
        let g = *out.last().expect("nonempty");
        out.push(g.refined());
    }
    out
}

pub fn korn_constant_converged(
    geom: &WasherGeometry,
    bc: BoundaryCondition,
    cutoff: u32,
    base: Grid,
    levels: usize,
) -> Result<ConvergedKorn> {
    korn_constant_on_ladder(geom, bc, cutoff, &refinement_ladder(base, levels))
}

/// Settings of the first-and-a-half constant search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Korn15Options {
    /// Total starts per mode.
    pub starts: usize,
    /// How many of the starts are the lowest `(A, B)` eigenvectors.
    pub eigen_starts: usize,
    pub max_iter: usize,
    /// Stop when an iteration raises the ratio by less than this, relatively.
    pub tol: f64,
    pub seed: u64,
}

impl Default for Korn15Options {
    fn default() -> Self {
        Self {
            starts: 20,
            eigen_starts: 5,
            max_iter: 300,
            tol: 1e-10,
            seed: 0x15,
        }
    }
}

/// `||sqrt(rho) grad u||^2 / (||sqrt(rho) u_z|| ||sqrt(rho) e(u)|| / h + ||sqrt(rho) e(u)||^2)`
/// for the reduced vector `x`, with `u_z` shifted optimally when a constant
/// `u_z` is admissible.
pub fn korn15_ratio(fm: &FormMatrices, x: &[f64]) -> Result<f64> {
    let h = fm.geometry.thickness;
    let a = fm.a.quad_form(x);
    let b = fm.b.quad_form(x);
    let m = fm.mz_form(x);
    if !(b > 0.0) {
        return Err(KornError::Degenerate("zero field has no first-and-a-half ratio".into()));
    }
    let rhs = (m * a).max(0.0).sqrt() / h + a;
    if rhs == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(b / rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Korn15Mode {
    pub n: u32,
    pub ratio: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip)]
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Korn15Result {
    /// Largest ratio found: the empirical constant.
    pub c: f64,
    pub mode: u32,
    pub converged: bool,
    pub per_mode: Vec<Korn15Mode>,
}

/// Maximizes `b / (sqrt(m a)/h + a)` over `span(V)` for a `B`-orthonormal
/// basis `V`, using `sqrt(m a) = min_s (s m + a / s) / 2`: for each `s` the
/// best direction is the lowest eigenvector of
/// `(s / 2h) M + (1 / (2 h s) + 1) A`.
fn maximize_in_span(am: &DMatrix<f64>, mm: &DMatrix<f64>, h: f64, s_hint: f64) -> (f64, nalgebra::DVector<f64>) {
    let eval = |ls: f64| -> (f64, nalgebra::DVector<f64>) {
        let s = ls.exp();
        let q = mm * (s / (2.0 * h)) + am * (1.0 / (2.0 * h * s) + 1.0);
        let q = (&q + q.transpose()) * 0.5;
        let eig = SymmetricEigen::new(q);
        let (i, lam) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i, *v))
            .expect("nonempty");
        (1.0 / lam, eig.eigenvectors.column(i).into_owned())
    };
    let centre = s_hint.max(1e-300).ln();
    let (mut best_ls, mut best) = (centre, eval(centre));
    let steps = 24;
    let span = 4.0 * std::f64::consts::LN_10;
    for k in 0..=steps {
        let ls = centre - span + 2.0 * span * k as f64 / steps as f64;
        let v = eval(ls);
        if v.0 > best.0 {
            best = v;
            best_ls = ls;
        }
    }
    // Golden-section refinement of 1 / lambda_min(s) around the best sample.
    let step = 2.0 * span / steps as f64;
    let (mut lo, mut hi) = (best_ls - step, best_ls + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..40 {
        if f1.0 > f2.0 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2);
        }
    }
    for cand in [f1, f2] {
        if cand.0 > best.0 {
            best = cand;
        }
    }
    best
}

struct Ascent<'a> {
    fm: &'a FormMatrices,
    precond: crate::linalg::BandCholesky,
}

impl Ascent<'_> {
    fn b_normalize(&self, x: &mut [f64]) -> bool {
        let b = self.fm.b.quad_form(x);
        if !(b > 0.0) || !b.is_finite() {
            return false;
        }
        let s = 1.0 / b.sqrt();
        x.iter_mut().for_each(|v| *v *= s);
        true
    }

    /// Projected gradient ascent from `x0` accelerated by exact maximization
    /// over `span{x, P^{-1} grad F, x - x_prev}`.
    fn run(&self, x0: Vec<f64>, opts: &Korn15Options) -> Result<(f64, Vec<f64>, bool, usize)> {
        let fm = self.fm;
        let h = fm.geometry.thickness;
        let mut x = x0;
        if !self.b_normalize(&mut x) {
            return Err(KornError::Degenerate("start vector has zero gradient norm".into()));
        }
        let mut f = korn15_ratio(fm, &x)?;
        let mut prev: Option<Vec<f64>> = None;
        for it in 1..=opts.max_iter {
            let ax = fm.a.apply(&x);
            let bx = fm.b.apply(&x);
            let gm = fm.mz_gradient(&x);
            let a: f64 = ax.iter().zip(&x).map(|(p, q)| p * q).sum();
            let b: f64 = bx.iter().zip(&x).map(|(p, q)| p * q).sum();
            let m = fm.mz_form(&x);
            let root = (m * a).max(1e-300).sqrt();
            let d_val = root / h + a;
            let mut grad = vec![0.0; x.len()];
            for i in 0..x.len() {
                let ga = 2.0 * ax[i];
                let gd = (a * gm[i] + m * ga) / (2.0 * h * root) + ga;
                grad[i] = (2.0 * bx[i] * d_val - b * gd) / (d_val * d_val);
            }
            self.precond.solve_in_place(&mut grad);
            let mut basis = vec![x.clone(), grad];
            if let Some(p) = &prev {
                basis.push(x.iter().zip(p).map(|(u, v)| u - v).collect());
            }
            // B-orthonormalize the search space.
            let mut vs: Vec<Vec<f64>> = Vec::new();
            let mut bvs: Vec<Vec<f64>> = Vec::new();
            for mut v in basis {
                for _ in 0..2 {
                    for (u, bu) in vs.iter().zip(&bvs) {
                        let c: f64 = bu.iter().zip(&v).map(|(p, q)| p * q).sum();
                        v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= c * ui);
                    }
                }
                let bv = fm.b.apply(&v);
                let nrm: f64 = bv.iter().zip(&v).map(|(p, q)| p * q).sum::<f64>();
                if nrm > 1e-24 {
                    let s = 1.0 / nrm.sqrt();
                    vs.push(v.iter().map(|t| t * s).collect());
                    bvs.push(bv.iter().map(|t| t * s).collect());
                }
            }
            let k = vs.len();
            let mut am = DMatrix::zeros(k, k);
            let mut mm = DMatrix::zeros(k, k);
            let avs: Vec<Vec<f64>> = vs.iter().map(|v| fm.a.apply(v)).collect();
            let mvs: Vec<Vec<f64>> = vs.iter().map(|v| fm.mz_gradient(v)).collect();
            for i in 0..k {
                for j in 0..k {
                    am[(i, j)] = vs[i].iter().zip(&avs[j]).map(|(p, q)| p * q).sum::<f64>();
                    mm[(i, j)] = 0.5 * vs[i].iter().zip(&mvs[j]).map(|(p, q)| p * q).sum::<f64>();
                }
            }
            let s_hint = (a / m.max(1e-300)).sqrt();
            let (_, y) = maximize_in_span(&am, &mm, h, s_hint);
            let mut xn = vec![0.0; x.len()];
            for (c, v) in y.iter().zip(&vs) {
                xn.iter_mut().zip(v).for_each(|(t, vi)| *t += c * vi);
            }
            if !self.b_normalize(&mut xn) {
                return Ok((f, x, false, it));
            }
            let fn_ = korn15_ratio(fm, &xn)?;
            if fn_ <= f * (1.0 + opts.tol) {
                if fn_ > f {
                    return Ok((fn_, xn, true, it));
                }
                return Ok((f, x, true, it));
            }
            prev = Some(std::mem::replace(&mut x, xn));
            f = fn_;
        }
        Ok((f, x, false, opts.max_iter))
    }
}

/// Empirical first-and-a-half constant of one assembled mode.
pub fn korn15_mode(fm: &FormMatrices, opts: &Korn15Options) -> Result<Korn15Mode> {
    let precond = fm
        .a
        .cholesky()
        .or_else(|_| fm.a.add_scaled(1e-8, &fm.b).cholesky())?;
    let ascent = Ascent { fm, precond };
    let dim = fm.dim();
    let ne = opts.eigen_starts.min(opts.starts).min(dim);
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(opts.starts);
    if ne > 0 {
        let sol = smallest_eigenpairs(&fm.a, &fm.b, ne, &PencilOptions::default())?;
        starts.extend(sol.pairs.into_iter().map(|p| p.vector));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (fm.mode as u64).wrapping_mul(0x9e37_79b9));
    while starts.len() < opts.starts {
        starts.push((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let mut best: Option<Korn15Mode> = None;
    for x0 in starts {
        let (ratio, vector, converged, iterations) = ascent.run(x0, opts)?;
        if best.as_ref().is_none_or(|b| ratio > b.ratio) {
            best = Some(Korn15Mode {
                n: fm.mode,
                ratio,
                converged,
                iterations,
                vector,
            });
        }
    }
    best.ok_or_else(|| KornError::InvalidArgument("at least one start is required".into()))
}

/// Empirical constant of `||sqrt(rho) grad u||^2 <= C (||sqrt(rho) u_z|| ||sqrt(rho) e|| / h + ||sqrt(rho) e||^2)`:
/// the largest ratio over modes `0..=cutoff` on `grid`. Mixing modes cannot
/// raise the ratio (Cauchy-Schwarz on the cross term), so the mode-wise
/// maximum is the discrete optimum.
pub fn korn15_constant(
    geom: &WasherGeometry,
    bc: BoundaryCondition,
    cutoff: u32,
    grid: Grid,
    opts: &Korn15Options,
) -> Result<Korn15Result> {
    let per_mode: Vec<Korn15Mode> = (0..=cutoff)
        .into_par_iter()
        .map(|n| {
            let key = format!("h={} mode={n}", geom.thickness);
            let fm = assemble(geom, n, bc, grid).map_err(task_err(key.clone()))?;
            korn15_mode(&fm, opts).map_err(task_err(key))
        })
        .collect::<Result<_>>()?;
    let best = per_mode
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .expect("cutoff >= 0 gives one mode");
    Ok(Korn15Result {
        c: best.ratio,
        mode: best.n,
        converged: best.converged,
        per_mode: per_mode.clone(),
    })
}
