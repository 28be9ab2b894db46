//! Per-mode finite element forms on the `(rho, z)` cross-section.
//!
//! A mode-`n` displacement is reduced to three nodal fields,
//!
//! ```text
//! u_rho = p(rho,z) cos(n theta),  u_theta = q(rho,z) sin(n theta),  u_z = w(rho,z) cos(n theta)
//! ```
//!
//! (at `n = 0`, `u_theta = q`). The companion family with `sin`/`cos`
//! exchanged gives identical forms, so its spectrum coincides and it is not
//! assembled. Gradient entries then are `cos`-type when `row + col` is even and
//! `sin`-type otherwise:
//!
//! ```text
//! [ p_rho          -(n p + q)/rho   p_z ]
//! [ q_rho           (n q + p)/rho   q_z ]
//! [ w_rho          -n w / rho       w_z ]
//! ```
//!
//! so `theta` integrates every quadratic form to `pi` (or `2 pi` at `n = 0`)
//! times the sum of squared entries. Elements are bilinear quadrilaterals with
//! 2 x 2 Gauss points and the `rho` weight inside the integrand.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::stress::{ElasticityTensor, StressField};
use crate::cylfield::{composite_nodes, BoundaryCondition, FourierField, Rule, WasherGeometry};
use crate::error::{KornError, Result};
use crate::linalg::SymBand;

/// Cells along `rho` and `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub n_rho: usize,
    pub n_z: usize,
}

impl Grid {
    pub fn new(n_rho: usize, n_z: usize) -> Self {
        Self { n_rho, n_z }
    }

    pub fn refined(&self) -> Self {
        Self::new(2 * self.n_rho, 2 * self.n_z)
    }

    pub fn nodes(&self) -> usize {
        (self.n_rho + 1) * (self.n_z + 1)
    }

    fn check(&self) -> Result<()> {
        if self.n_rho < 4 || self.n_z < 4 {
            return Err(KornError::InvalidArgument(format!(
                "grid {}x{} is degenerate; at least 4x4 cells are needed",
                self.n_rho, self.n_z
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.n_rho, self.n_z)
    }
}

impl std::str::FromStr for Grid {
    type Err = KornError;
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| KornError::InvalidArgument(format!("grid `{s}` is not of the form AxB")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| KornError::InvalidArgument(format!("grid `{s}` is not of the form AxB")))
        };
        Ok(Grid::new(parse(a)?, parse(b)?))
    }
}

/// Component of a nodal DOF.
pub const P: usize = 0;
pub const Q: usize = 1;
pub const W: usize = 2;

/// Full DOF index of component `c` at node `(i_rho, i_z)`.
pub fn dof_index(grid: &Grid, i_rho: usize, i_z: usize, c: usize) -> usize {
    (i_rho * (grid.n_z + 1) + i_z) * 3 + c
}

/// A direction with vanishing gradient that survives the constraints; it is
/// removed by pinning one of its DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDirection {
    /// Full DOF index that was pinned to zero.
    pub pinned: usize,
    /// The direction in full DOF numbering.
    pub vector: Vec<f64>,
}

/// How the full DOF vector maps to the reduced (solved-for) vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub grid: Grid,
    /// Whether each full DOF stays in the reduced system.
    pub keep: Vec<bool>,
    /// Constrained by the boundary condition (a subset of `!keep`).
    pub constrained: Vec<bool>,
    pub null: Option<NullDirection>,
}

impl DofMap {
    pub fn full_len(&self) -> usize {
        self.keep.len()
    }

    pub fn reduced_len(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        full.iter().zip(&self.keep).filter(|(_, &k)| k).map(|(v, _)| *v).collect()
    }

    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut it = reduced.iter();
        self.keep
            .iter()
            .map(|&k| if k { *it.next().expect("reduced vector too short") } else { 0.0 })
            .collect()
    }

    /// Restriction of a full vector after removing its component along the
    /// null direction (so that the pinned DOF is zero).
    pub fn reduce(&self, full: &[f64]) -> Vec<f64> {
        match &self.null {
            Some(nd) => {
                let c = full[nd.pinned] / nd.vector[nd.pinned];
                let shifted: Vec<f64> = full.iter().zip(&nd.vector).map(|(a, b)| a - c * b).collect();
                self.restrict(&shifted)
            }
            None => self.restrict(full),
        }
    }
}

/// Discretized quadratic forms of one mode under one boundary condition.
#[derive(Debug, Clone)]
pub struct FormMatrices {
    pub geometry: WasherGeometry,
    pub mode: u32,
    /// `None` for the unconstrained assembly.
    pub bc: Option<BoundaryCondition>,
    pub grid: Grid,
    /// `x -> ||sqrt(rho) e(u_x)||^2`.
    pub a: SymBand,
    /// `x -> ||sqrt(rho) grad u_x||^2`.
    pub b: SymBand,
    /// `x -> ||sqrt(rho) u_z||^2`.
    pub mz: SymBand,
    /// `x -> ||u_rho / sqrt(rho)||^2`.
    pub radial: SymBand,
    pub dof_map: DofMap,
    /// `mz` before pinning, present when a null direction was removed.
    mz_unpinned: Option<SymBand>,
}

/// Gradient entries at one quadrature point as linear functionals of the 12
/// element DOFs, plus the `w` and `p` values.
pub(crate) struct PointOps {
    pub rho: f64,
    pub z: f64,
    /// Quadrature weight times Jacobian times `rho` times the `theta` factor.
    pub weight: f64,
    pub n: u32,
    /// Entry `3 k + l` of the gradient.
    pub e: [[f64; 12]; 9],
    pub sym: [[f64; 12]; 9],
    pub p: [f64; 12],
    pub w: [f64; 12],
}

/// `cos`-type entries are those with even `row + col`.
pub(crate) fn is_sin_type(entry: usize) -> bool {
    (entry / 3 + entry % 3) % 2 == 1
}

pub(crate) fn theta_factor(n: u32) -> f64 {
    if n == 0 {
        2.0 * PI
    } else {
        PI
    }
}

fn outer(loc: &mut [[f64; 12]; 12], a: &[f64; 12], b: &[f64; 12], c: f64) {
    for i in 0..12 {
        if a[i] == 0.0 {
            continue;
        }
        let ai = c * a[i];
        for j in 0..12 {
            loc[i][j] += ai * b[j];
        }
    }
}

type Kernel<'a> = Box<dyn Fn(&PointOps, &mut [[f64; 12]; 12]) + 'a>;

/// Assembles one banded matrix per kernel over the full DOF set.
fn assemble_with(geom: &WasherGeometry, n: u32, grid: &Grid, kernels: &[Kernel<'_>]) -> Vec<SymBand> {
    let ndof = grid.nodes() * 3;
    let bw = 3 * (grid.n_z + 2) + 2;
    let mut mats: Vec<SymBand> = kernels.iter().map(|_| SymBand::zeros(ndof, bw)).collect();
    let dr = geom.width() / grid.n_rho as f64;
    let dz = geom.thickness / grid.n_z as f64;
    let gp = composite_nodes(0.0, 1.0, 1, Rule::Gauss(2));
    let nf = n as f64;
    let tf = theta_factor(n);
    let mut locals = vec![[[0.0f64; 12]; 12]; kernels.len()];
    for i in 0..grid.n_rho {
        let r0 = geom.inner + dr * i as f64;
        for j in 0..grid.n_z {
            let z0 = dz * j as f64;
            for l in locals.iter_mut() {
                *l = [[0.0; 12]; 12];
            }
            for &(s, ws) in &gp {
                for &(t, wt) in &gp {
                    let rho = r0 + s * dr;
                    let z = z0 + t * dz;
                    let nval = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
                    let dnr = [-(1.0 - t) / dr, (1.0 - t) / dr, -t / dr, t / dr];
                    let dnz = [-(1.0 - s) / dz, -s / dz, (1.0 - s) / dz, s / dz];
                    let mut op = PointOps {
                        rho,
                        z,
                        weight: ws * wt * dr * dz * rho * tf,
                        n,
                        e: [[0.0; 12]; 9],
                        sym: [[0.0; 12]; 9],
                        p: [0.0; 12],
                        w: [0.0; 12],
                    };
                    for a in 0..4 {
                        let (dp, dq, dw) = (3 * a + P, 3 * a + Q, 3 * a + W);
                        let nr = nval[a] / rho;
                        op.e[0][dp] = dnr[a];
                        op.e[1][dp] = -nf * nr;
                        op.e[1][dq] = -nr;
                        op.e[2][dp] = dnz[a];
                        op.e[3][dq] = dnr[a];
                        op.e[4][dq] = nf * nr;
                        op.e[4][dp] = nr;
                        op.e[5][dq] = dnz[a];
                        op.e[6][dw] = dnr[a];
                        op.e[7][dw] = -nf * nr;
                        op.e[8][dw] = dnz[a];
                        op.p[dp] = nval[a];
                        op.w[dw] = nval[a];
                    }
                    for k in 0..3 {
                        for l in 0..3 {
                            for d in 0..12 {
                                op.sym[3 * k + l][d] = 0.5 * (op.e[3 * k + l][d] + op.e[3 * l + k][d]);
                            }
                        }
                    }
                    for (kern, loc) in kernels.iter().zip(locals.iter_mut()) {
                        kern(&op, loc);
                    }
                }
            }
            let nodes = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
            let mut g = [0usize; 12];
            for (a, &(ni, nj)) in nodes.iter().enumerate() {
                for c in 0..3 {
                    g[3 * a + c] = dof_index(grid, ni, nj, c);
                }
            }
            for (m, loc) in mats.iter_mut().zip(&locals) {
                for x in 0..12 {
                    for y in 0..12 {
                        // Distinct local DOFs have distinct global indices, so
                        // this visits every symmetric pair exactly once.
                        if g[x] >= g[y] && loc[x][y] != 0.0 {
                            m.add(g[x], g[y], loc[x][y]);
                        }
                    }
                }
            }
        }
    }
    mats
}

fn grad_kernel(op: &PointOps, loc: &mut [[f64; 12]; 12]) {
    for row in &op.e {
        outer(loc, row, row, op.weight);
    }
}

fn strain_kernel(op: &PointOps, loc: &mut [[f64; 12]; 12]) {
    for row in &op.sym {
        outer(loc, row, row, op.weight);
    }
}

fn uz_kernel(op: &PointOps, loc: &mut [[f64; 12]; 12]) {
    outer(loc, &op.w, &op.w, op.weight);
}

fn radial_kernel(op: &PointOps, loc: &mut [[f64; 12]; 12]) {
    outer(loc, &op.p, &op.p, op.weight / (op.rho * op.rho));
}

/// Boundary mask of `bc` on the full DOF set.
fn constrained_mask(grid: &Grid, bc: Option<BoundaryCondition>) -> Result<Vec<bool>> {
    let mut mask = vec![false; grid.nodes() * 3];
    let Some(bc) = bc else { return Ok(mask) };
    let comps = bc
        .washer_constraints()
        .ok_or_else(|| KornError::UnsupportedPairing(format!("{bc} is not a washer condition")))?;
    for &i in &[0, grid.n_rho] {
        for j in 0..=grid.n_z {
            for (c, &fixed) in comps.iter().enumerate() {
                if fixed {
                    mask[dof_index(grid, i, j, c)] = true;
                }
            }
        }
    }
    Ok(mask)
}

/// Candidate directions with identically vanishing gradient in the reduced
/// three-field family: constant `w` at `n = 0`, and the translation
/// `p = 1, q = -1` at `n = 1`.
fn null_candidates(grid: &Grid, n: u32) -> Vec<Vec<f64>> {
    let len = grid.nodes() * 3;
    let mut out = Vec::new();
    if n == 0 {
        let mut v = vec![0.0; len];
        for k in 0..grid.nodes() {
            v[3 * k + W] = 1.0;
        }
        out.push(v);
    }
    if n == 1 {
        let mut v = vec![0.0; len];
        for k in 0..grid.nodes() {
            v[3 * k + P] = 1.0;
            v[3 * k + Q] = -1.0;
        }
        out.push(v);
    }
    out
}

fn finish(
    geometry: &WasherGeometry,
    n: u32,
    bc: Option<BoundaryCondition>,
    grid: Grid,
    mats: Vec<SymBand>,
) -> Result<FormMatrices> {
    let mut it = mats.into_iter();
    let (a, b, mz, radial) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    let constrained = constrained_mask(&grid, bc)?;
    let mut keep: Vec<bool> = constrained.iter().map(|c| !c).collect();
    let mut null = None;
    if bc.is_some() {
        let scale = b.max_abs();
        for v in null_candidates(&grid, n) {
            if v.iter().zip(&constrained).any(|(x, &c)| c && *x != 0.0) {
                continue;
            }
            let bv = b.apply(&v);
            let res = bv.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if res <= 1e-10 * scale * v.iter().fold(0.0f64, |m, x| m.max(x.abs())) {
                let pinned = v.iter().position(|&x| x != 0.0).expect("nonzero candidate");
                keep[pinned] = false;
                null = Some(NullDirection { pinned, vector: v });
                break;
            }
        }
    }
    let mz_unpinned = null.as_ref().map(|nd| {
        let mut k = keep.clone();
        k[nd.pinned] = true;
        mz.restrict(&k)
    });
    let fm = FormMatrices {
        geometry: *geometry,
        mode: n,
        bc,
        grid,
        a: a.restrict(&keep),
        b: b.restrict(&keep),
        mz: mz.restrict(&keep),
        radial: radial.restrict(&keep),
        dof_map: DofMap {
            grid,
            keep,
            constrained,
            null,
        },
        mz_unpinned,
    };
    Ok(fm)
}

/// Forms of mode `n` under `bc` with constrained DOFs eliminated and the
/// gradient null space (if admissible) pinned away.
///
/// # Errors
/// `SingularPencil` when `B` is still singular after pinning, judged by a
/// Cholesky pivot below `1e-10 max|B_ii|`.
pub fn assemble(geometry: &WasherGeometry, n: u32, bc: BoundaryCondition, grid: Grid) -> Result<FormMatrices> {
    geometry.validate()?;
    grid.check()?;
    if !bc.is_washer() {
        return Err(KornError::UnsupportedPairing(format!("{bc} is not a washer condition")));
    }
    let mats = assemble_with(
        geometry,
        n,
        &grid,
        &[Box::new(strain_kernel), Box::new(grad_kernel), Box::new(uz_kernel), Box::new(radial_kernel)],
    );
    let fm = finish(geometry, n, Some(bc), grid, mats)?;
    if fm.b.cholesky_with_tol(1e-10).is_err() {
        return Err(KornError::SingularPencil {
            null_dim: 1 + usize::from(fm.dof_map.null.is_some()),
        });
    }
    Ok(fm)
}

/// Forms of mode `n` with no boundary constraints and no deflation.
pub fn assemble_free(geometry: &WasherGeometry, n: u32, grid: Grid) -> Result<FormMatrices> {
    geometry.validate()?;
    grid.check()?;
    let mats = assemble_with(
        geometry,
        n,
        &grid,
        &[Box::new(strain_kernel), Box::new(grad_kernel), Box::new(uz_kernel), Box::new(radial_kernel)],
    );
    finish(geometry, n, None, grid, mats)
}

/// Buckling forms of one mode: numerator `(L0 e, e)` and denominator
/// `-(sigma, grad^T grad)`, both `rho`-weighted, on the same reduced DOFs
/// as [`assemble`].
#[derive(Debug, Clone)]
pub struct BucklingForms {
    pub mode: u32,
    pub numerator: SymBand,
    pub denominator: SymBand,
    pub dof_map: DofMap,
}

pub fn assemble_buckling(
    geometry: &WasherGeometry,
    n: u32,
    bc: BoundaryCondition,
    grid: Grid,
    sigma: &StressField,
    l0: &ElasticityTensor,
) -> Result<BucklingForms> {
    geometry.validate()?;
    grid.check()?;
    let (lam, mu) = (l0.lambda, l0.mu);
    let numerator: Kernel<'_> = Box::new(move |op, loc| {
        let mut tr = [0.0; 12];
        for d in 0..12 {
            tr[d] = op.e[0][d] + op.e[4][d] + op.e[8][d];
        }
        outer(loc, &tr, &tr, op.weight * lam);
        for row in &op.sym {
            outer(loc, row, row, op.weight * 2.0 * mu);
        }
    });
    let bad_sigma = std::cell::Cell::new(None::<(f64, f64)>);
    let denominator: Kernel<'_> = Box::new(|op, loc| {
        let s: Matrix3<f64> = sigma.at(op.rho, op.z);
        if (s - s.transpose()).abs().max() > 1e-12 * s.abs().max().max(1.0) || !s.iter().all(|v| v.is_finite()) {
            bad_sigma.set(Some((op.rho, op.z)));
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let sjk = s[(j, k)];
                    if sjk == 0.0 {
                        continue;
                    }
                    let (ej, ek) = (3 * i + j, 3 * i + k);
                    if op.n > 0 && is_sin_type(ej) != is_sin_type(ek) {
                        continue;
                    }
                    outer(loc, &op.e[ej], &op.e[ek], -op.weight * sjk);
                }
            }
        }
    });
    let zero: Kernel<'_> = Box::new(|_, _| {});
    let mats = assemble_with(geometry, n, &grid, &[numerator, Box::new(grad_kernel), denominator, zero]);
    if let Some((rho, z)) = bad_sigma.get() {
        return Err(KornError::InvalidArgument(format!(
            "stress is not a finite symmetric matrix at rho = {rho}, z = {z}"
        )));
    }
    // Reuse the constraint and null-space logic of the Korn forms: the
    // numerator takes the strain slot and the denominator the mass slot.
    let fm = finish(geometry, n, Some(bc), grid, mats)?;
    Ok(BucklingForms {
        mode: n,
        numerator: fm.a,
        denominator: fm.mz,
        dof_map: fm.dof_map,
    })
}

impl FormMatrices {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `||sqrt(rho) u_z||^2` of the reduced vector `x`, minimized over the
    /// pinned null direction (a constant shift of `u_z` when present).
    pub fn mz_form(&self, x: &[f64]) -> f64 {
        match (&self.dof_map.null, &self.mz_unpinned) {
            (Some(nd), Some(m)) => {
                let mut k = self.dof_map.keep.clone();
                k[nd.pinned] = true;
                let xf = self.dof_map.expand(x);
                let xu: Vec<f64> = xf.iter().zip(&k).filter(|(_, &kk)| kk).map(|(v, _)| *v).collect();
                let vu: Vec<f64> = nd.vector.iter().zip(&k).filter(|(_, &kk)| kk).map(|(v, _)| *v).collect();
                let mx = m.apply(&xu);
                let xmx: f64 = xu.iter().zip(&mx).map(|(a, b)| a * b).sum();
                let vmx: f64 = vu.iter().zip(&mx).map(|(a, b)| a * b).sum();
                let vmv = m.quad_form(&vu);
                (xmx - vmx * vmx / vmv).max(0.0)
            }
            _ => self.mz.quad_form(x),
        }
    }

    /// Gradient of [`FormMatrices::mz_form`].
    pub fn mz_gradient(&self, x: &[f64]) -> Vec<f64> {
        match (&self.dof_map.null, &self.mz_unpinned) {
            (Some(nd), Some(m)) => {
                let mut k = self.dof_map.keep.clone();
                k[nd.pinned] = true;
                let xf = self.dof_map.expand(x);
                let xu: Vec<f64> = xf.iter().zip(&k).filter(|(_, &kk)| kk).map(|(v, _)| *v).collect();
                let vu: Vec<f64> = nd.vector.iter().zip(&k).filter(|(_, &kk)| kk).map(|(v, _)| *v).collect();
                let mx = m.apply(&xu);
                let mv = m.apply(&vu);
                let vmx: f64 = vu.iter().zip(&mx).map(|(a, b)| a * b).sum();
                let vmv: f64 = vu.iter().zip(&mv).map(|(a, b)| a * b).sum();
                let c = vmx / vmv;
                // 2 M (x - c v), then drop the pinned entry.
                let gu: Vec<f64> = mx.iter().zip(&mv).map(|(a, b)| 2.0 * (a - c * b)).collect();
                let mut out = Vec::with_capacity(x.len());
                let mut gu_it = gu.into_iter();
                for (&unpinned, &kept) in k.iter().zip(self.dof_map.keep.iter()) {
                    if unpinned {
                        let v = gu_it.next().expect("one entry per unpinned DOF");
                        if kept {
                            out.push(v);
                        }
                    }
                }
                out
            }
            _ => self.mz.apply(x).iter().map(|v| 2.0 * v).collect(),
        }
    }

    /// Nodal interpolant of mode `self.mode` of `field` in full DOF numbering:
    /// `p = a_rho`, `q = b_theta` (`a_theta` at `n = 0`), `w = a_z`.
    pub fn interpolate_full(&self, field: &FourierField) -> Result<Vec<f64>> {
        interpolate_full(field, self.mode, &self.geometry, &self.grid)
    }

    /// Interpolant reduced to the solved-for DOFs (after removing the pinned
    /// null direction, which changes none of the forms except `u_z` mass).
    pub fn interpolate(&self, field: &FourierField) -> Result<Vec<f64>> {
        Ok(self.dof_map.reduce(&self.interpolate_full(field)?))
    }
}

pub fn interpolate_full(field: &FourierField, n: u32, geom: &WasherGeometry, grid: &Grid) -> Result<Vec<f64>> {
    let m = field
        .mode(n)
        .ok_or_else(|| KornError::InvalidArgument(format!("field has no mode {n}")))?;
    let mut x = vec![0.0; grid.nodes() * 3];
    for i in 0..=grid.n_rho {
        let rho = crate::cylfield::node(geom.inner, geom.outer, grid.n_rho, i);
        for j in 0..=grid.n_z {
            let z = crate::cylfield::node(0.0, geom.thickness, grid.n_z, j);
            let jet = m.jets(rho, z);
            x[dof_index(grid, i, j, P)] = jet.a_rho.v;
            x[dof_index(grid, i, j, Q)] = if n == 0 { jet.a_theta.v } else { jet.b_theta.v };
            x[dof_index(grid, i, j, W)] = jet.a_z.v;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(KornError::NonFinite("interpolated field".into()));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylfield::{Jet2, ModeCoeffs, Profile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn washer() -> WasherGeometry {
        WasherGeometry::new(0.5, 1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn forms_are_symmetric_psd_and_ordered() {
        let g = washer();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [0, 1, 3] {
            let fm = assemble_free(&g, n, Grid::new(8, 4)).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..fm.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let a = fm.a.quad_form(&x);
                let b = fm.b.quad_form(&x);
                assert!(a >= 0.0 && b >= 0.0);
                assert!(a <= b * (1.0 + 1e-12), "n={n}: {a} > {b}");
            }
        }
    }

    #[test]
    fn rigid_rotation_is_strain_free_only_without_constraints() {
        let g = washer();
        let mut m = ModeCoeffs::new(0);
        m.a_theta = Profile::closed(|rho, _| Jet2::new(rho, 1.0, 0.0));
        let f = FourierField::new(g, vec![m]).unwrap();
        let free = assemble_free(&g, 0, Grid::new(16, 4)).unwrap();
        let x = free.interpolate_full(&f).unwrap();
        assert!(free.a.quad_form(&x) <= 1e-8 * free.b.quad_form(&x));
        for bc in [BoundaryCondition::V1, BoundaryCondition::V2] {
            let fm = assemble(&g, 0, bc, Grid::new(16, 4)).unwrap();
            let x = fm.interpolate(&f).unwrap();
            assert!(fm.a.quad_form(&x) > 0.0);
        }
    }

    #[test]
    fn constant_w_is_pinned_under_v1_only() {
        let g = washer();
        let v1 = assemble(&g, 0, BoundaryCondition::V1, Grid::new(8, 4)).unwrap();
        assert!(v1.dof_map.null.is_some());
        let v2 = assemble(&g, 0, BoundaryCondition::V2, Grid::new(8, 4)).unwrap();
        assert!(v2.dof_map.null.is_none());
        let v1n1 = assemble(&g, 1, BoundaryCondition::V1, Grid::new(8, 4)).unwrap();
        assert!(v1n1.dof_map.null.is_none());
        // 9*5 nodes, 3 DOFs, V1 fixes p, q on 2*5 nodes, one pin.
        assert_eq!(v1.dim(), 135 - 20 - 1);
    }

    #[test]
    fn projected_mass_ignores_constant_shift() {
        let g = washer();
        let fm = assemble(&g, 0, BoundaryCondition::V1, Grid::new(8, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..fm.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = fm.mz_form(&x);
        assert!(m > 0.0 && m <= fm.mz.quad_form(&x) * (1.0 + 1e-12));
        let grad = fm.mz_gradient(&x);
        let eps = 1e-6;
        for k in [0, 7, 50] {
            let mut xp = x.clone();
            xp[k] += eps;
            let mut xm = x.clone();
            xm[k] -= eps;
            let fd = (fm.mz_form(&xp) - fm.mz_form(&xm)) / (2.0 * eps);
            assert!((fd - grad[k]).abs() < 1e-6 * grad[k].abs().max(1e-3), "{k}: {fd} {}", grad[k]);
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!("32x8".parse::<Grid>().unwrap(), Grid::new(32, 8));
        assert!("32".parse::<Grid>().is_err());
        assert!(assemble_free(&washer(), 0, Grid::new(3, 8)).is_err());
    }
}
