//! Smallest eigenpairs of a symmetric-definite pencil `K x = lambda M x`.
//!
//! The banded solver runs block subspace iteration on the shift-inverted
//! operator `(K - s M)^{-1} M`, keeps the block `M`-orthonormal and extracts
//! Ritz pairs from the projected `K`. The shift starts at or below zero and is
//! pulled up towards the lowest Ritz value once that settles; a failed
//! Cholesky factorization of `K - s M` means the shift overshot `lambda_1`, in
//! which case the previous factor is kept.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::band::{BandCholesky, SymBand};
use super::cg::{dot, norm};
use crate::error::{KornError, Result};

/// Problems at most this large go straight to the dense solver.
pub const DENSE_CUTOFF: usize = 48;
/// Iterations without a halving of the residual that count as stagnation.
const STALL_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilOptions {
    /// Target residual `||K x - lambda M x|| / (max(1, |lambda|) ||M x||)`.
    pub tol: f64,
    /// Residual still accepted when the iteration budget runs out.
    pub accept_tol: f64,
    pub max_iter: usize,
    /// Seed of the starting block.
    pub seed: u64,
    /// Block size; defaults to `max(2 count, count + 8)`.
    pub block: Option<usize>,
}

impl Default for PencilOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            accept_tol: 1e-8,
            max_iter: 400,
            seed: 0x5eed,
            block: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenpair {
    pub value: f64,
    /// `M`-normalized eigenvector.
    pub vector: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PencilSolution {
    /// Ascending eigenvalues.
    pub pairs: Vec<Eigenpair>,
    pub iterations: usize,
    pub shift: f64,
}

/// Residual `||K x - lambda M x|| / (max(1, |lambda|) ||M x||)`: plain
/// `||K x - lambda M x|| / ||M x||` for eigenvalues up to one, relative to
/// `lambda` above that.
pub fn pencil_residual(k: &SymBand, m: &SymBand, lambda: f64, x: &[f64]) -> f64 {
    let kx = k.apply(x);
    let mx = m.apply(x);
    let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
    norm(&r) / (norm(&mx) * lambda.abs().max(1.0))
}

/// All eigenpairs of the dense pencil, ascending. `M` must be positive definite.
pub fn dense_pencil_eigen(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    let chol = m.clone().cholesky().ok_or(KornError::NotPositiveDefinite { row: 0, pivot: f64::NAN })?;
    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| KornError::Degenerate("singular Cholesky factor".into()))?;
    let mut c = &linv * k * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    let back = linv.transpose() * &eig.eigenvectors;
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &back.column(src));
    }
    Ok((values, vecs))
}

fn dense_smallest(k: &SymBand, m: &SymBand, count: usize) -> Result<PencilSolution> {
    let (values, vecs) = dense_pencil_eigen(&k.to_dense(), &m.to_dense())?;
    let pairs = (0..count.min(values.len()))
        .map(|i| {
            let v: Vec<f64> = vecs.column(i).iter().copied().collect();
            Eigenpair {
                value: values[i],
                residual: pencil_residual(k, m, values[i], &v),
                vector: v,
            }
        })
        .collect();
    Ok(PencilSolution {
        pairs,
        iterations: 0,
        shift: f64::NAN,
    })
}

/// Column-major `n x p` block.
struct Block {
    n: usize,
    data: Vec<f64>,
}

impl Block {
    fn zeros(n: usize, p: usize) -> Self {
        Self { n, data: vec![0.0; n * p] }
    }
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }
    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }
    fn p(&self) -> usize {
        self.data.len() / self.n
    }
    /// `self * q` for a small `p x p'` matrix.
    fn times(&self, q: &DMatrix<f64>) -> Block {
        let mut out = Block::zeros(self.n, q.ncols());
        for j in 0..q.ncols() {
            let dst = &mut out.data[j * self.n..(j + 1) * self.n];
            for i in 0..q.nrows() {
                let c = q[(i, j)];
                if c != 0.0 {
                    for (d, s) in dst.iter_mut().zip(self.col(i)) {
                        *d += c * s;
                    }
                }
            }
        }
        out
    }
}

fn factor_shifted(k: &SymBand, m: &SymBand, s: f64) -> Result<BandCholesky> {
    if s == 0.0 {
        k.cholesky()
    } else {
        k.add_scaled(-s, m).cholesky()
    }
}

/// `M`-orthonormalizes the columns of `y` in place (two passes of modified
/// Gram-Schmidt); columns that collapse are replaced by random vectors.
fn m_orthonormalize(y: &mut Block, m: &SymBand, rng: &mut ChaCha8Rng) -> Block {
    let n = y.n;
    let p = y.p();
    let mut my = Block::zeros(n, p);
    for j in 0..p {
        let mut tries = 0;
        loop {
            let mut mv = m.apply(y.col(j));
            let before = dot(y.col(j), &mv).max(0.0).sqrt();
            for _pass in 0..2 {
                for i in 0..j {
                    let c = dot(my.col(i), y.col(j));
                    let yi: Vec<f64> = y.col(i).to_vec();
                    for (a, b) in y.col_mut(j).iter_mut().zip(&yi) {
                        *a -= c * b;
                    }
                    for (a, b) in mv.iter_mut().zip(my.col(i)) {
                        *a -= c * b;
                    }
                }
            }
            let nrm = dot(y.col(j), &mv).max(0.0).sqrt();
            if nrm > 1e-10 * before && nrm.is_finite() && nrm > 0.0 {
                for v in y.col_mut(j) {
                    *v /= nrm;
                }
                for (d, v) in my.col_mut(j).iter_mut().zip(&mv) {
                    *d = v / nrm;
                }
                break;
            }
            tries += 1;
            assert!(tries < 10, "could not extend the M-orthonormal block");
            for v in y.col_mut(j) {
                *v = rng.random_range(-1.0..1.0);
            }
        }
    }
    my
}

/// The `count` smallest eigenpairs of `K x = lambda M x` with `K` symmetric and
/// `M` symmetric positive definite.
pub fn smallest_eigenpairs(k: &SymBand, m: &SymBand, count: usize, opts: &PencilOptions) -> Result<PencilSolution> {
    let n = k.dim();
    if m.dim() != n || count == 0 || count > n {
        return Err(KornError::InvalidArgument(format!(
            "pencil of sizes {n}/{} cannot give {count} eigenpairs",
            m.dim()
        )));
    }
    if !k.is_finite() || !m.is_finite() {
        return Err(KornError::NonFinite("pencil matrices".into()));
    }
    m.cholesky()?;
    let p = opts.block.unwrap_or((2 * count).max(count + 8)).max(count).min(n);
    if n <= DENSE_CUTOFF || p * 2 >= n {
        return dense_smallest(k, m, count);
    }

    // Start from a shift at or below zero that keeps K - sM definite.
    let scale = k.max_abs() / m.max_abs().max(f64::MIN_POSITIVE);
    let mut s = 0.0;
    let mut factor = factor_shifted(k, m, s);
    let mut delta = 1e-6 * scale.max(f64::MIN_POSITIVE);
    let mut attempts = 0;
    while factor.is_err() {
        attempts += 1;
        if attempts > 40 {
            return Err(KornError::Degenerate("no definite shift found for the pencil".into()));
        }
        s = -delta;
        delta *= 10.0;
        factor = factor_shifted(k, m, s);
    }
    // A shift found by decades can sit far below lambda_1; tighten it by
    // bisection in log scale between the last indefinite and the definite one.
    if s < 0.0 && attempts > 1 {
        let (mut bad, mut good) = (s / 10.0, s);
        for _ in 0..8 {
            let mid = -((bad.abs().ln() + good.abs().ln()) * 0.5).exp();
            match factor_shifted(k, m, mid) {
                Ok(f) => {
                    good = mid;
                    factor = Ok(f);
                }
                Err(_) => bad = mid,
            }
        }
        s = good;
    }
    let mut factor = factor?;
    let mut shift_frozen = false;
    let mut shift_moves = 0;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = Block::zeros(n, p);
    for v in x.data.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    let mut best: Option<(Vec<Eigenpair>, f64)> = None;
    let mut history = Vec::new();
    for it in 1..=opts.max_iter {
        let mut y = Block::zeros(n, p);
        for j in 0..p {
            let col = y.col_mut(j);
            m.matvec(x.col(j), col);
            factor.solve_in_place(col);
        }
        let my = m_orthonormalize(&mut y, m, &mut rng);
        let mut ky = Block::zeros(n, p);
        for j in 0..p {
            k.matvec(y.col(j), ky.col_mut(j));
        }
        let mut h = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let v = 0.5 * (dot(y.col(i), ky.col(j)) + dot(y.col(j), ky.col(i)));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut q = DMatrix::zeros(p, p);
        for (dst, &src) in order.iter().enumerate() {
            q.set_column(dst, &eig.eigenvectors.column(src));
        }
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = y.times(&q);
        let kx = ky.times(&q);
        let mx = my.times(&q);

        let mut pairs = Vec::with_capacity(count);
        for i in 0..count {
            let r: Vec<f64> = kx.col(i).iter().zip(mx.col(i)).map(|(a, b)| a - theta[i] * b).collect();
            pairs.push(Eigenpair {
                value: theta[i],
                vector: x.col(i).to_vec(),
                residual: norm(&r) / (norm(mx.col(i)) * theta[i].abs().max(1.0)),
            });
        }
        let worst = pairs.iter().map(|e| e.residual).fold(0.0, f64::max);
        if worst <= opts.tol {
            return Ok(PencilSolution {
                pairs,
                iterations: it,
                shift: s,
            });
        }
        if best.as_ref().is_none_or(|(_, r)| worst < *r) {
            best = Some((pairs, worst));
        }
        // Rounding floor: accept once the residual is good enough and has
        // not halved over the last STALL_WINDOW iterations.
        history.push(worst);
        if it > STALL_WINDOW {
            let before = history[it - 1 - STALL_WINDOW];
            let now = best.as_ref().map_or(f64::INFINITY, |(_, r)| *r);
            if now <= opts.accept_tol && now > 0.5 * before {
                let (pairs, _) = best.expect("set above");
                return Ok(PencilSolution {
                    pairs,
                    iterations: it,
                    shift: s,
                });
            }
        }

        // Pull the shift towards the lowest Ritz value once it has settled.
        let r1 = best.as_ref().map_or(1.0, |(b, _)| b[0].residual);
        if !shift_frozen && it >= 3 && r1 < 1e-3 && shift_moves < 6 {
            let target = s + 0.9 * (theta[0] - s);
            if target > s {
                match factor_shifted(k, m, target) {
                    Ok(f) => {
                        factor = f;
                        s = target;
                        shift_moves += 1;
                    }
                    Err(_) => shift_frozen = true,
                }
            }
        }
    }
    let (pairs, worst) = best.expect("at least one iteration");
    if worst <= opts.accept_tol {
        Ok(PencilSolution {
            pairs,
            iterations: opts.max_iter,
            shift: s,
        })
    } else {
        Err(KornError::Stagnation {
            iterations: opts.max_iter,
            residual: worst,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_banded_spd(n: usize, bw: usize, seed: u64, shift: f64) -> SymBand {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = SymBand::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                a.add(i, j, rng.random_range(-1.0..1.0));
            }
        }
        for i in 0..n {
            let row: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
            a.add(i, i, row + shift + rng.random_range(0.0..1.0));
        }
        a
    }

    #[test]
    fn identity_pencil_has_unit_eigenvalues() {
        let a = random_banded_spd(120, 3, 1, 0.1);
        let sol = smallest_eigenpairs(&a, &a, 1, &PencilOptions::default()).unwrap();
        assert!((sol.pairs[0].value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn diagonal_pencil() {
        let d: Vec<f64> = (0..100).map(|i| 1.0 + i as f64).collect();
        let sol = smallest_eigenpairs(&SymBand::from_diagonal(&d), &SymBand::identity(100), 3, &PencilOptions::default()).unwrap();
        for (i, e) in sol.pairs.iter().enumerate() {
            assert!((e.value - (1.0 + i as f64)).abs() < 1e-9, "{i}: {}", e.value);
        }
    }

    #[test]
    fn matches_dense_oracle() {
        for seed in 0..4 {
            let k = random_banded_spd(150, 4, seed, 0.0);
            let m = random_banded_spd(150, 2, 100 + seed, 1.0);
            let sol = smallest_eigenpairs(&k, &m, 3, &PencilOptions::default()).unwrap();
            let (vals, _) = dense_pencil_eigen(&k.to_dense(), &m.to_dense()).unwrap();
            for i in 0..3 {
                assert!((sol.pairs[i].value - vals[i]).abs() <= 1e-8 * vals[i].abs(), "seed {seed}");
                assert!(sol.pairs[i].residual <= 1e-8);
            }
        }
    }

    #[test]
    fn indefinite_k_is_handled_by_negative_shift() {
        let mut k = random_banded_spd(100, 2, 7, 0.0);
        for i in 0..100 {
            k.add(i, i, -3.0);
        }
        let m = SymBand::identity(100);
        let sol = smallest_eigenpairs(&k, &m, 2, &PencilOptions::default()).unwrap();
        let (vals, _) = dense_pencil_eigen(&k.to_dense(), &m.to_dense()).unwrap();
        assert!(vals[0] < 0.0);
        assert!((sol.pairs[0].value - vals[0]).abs() < 1e-8 * vals[0].abs());
        assert!((sol.pairs[1].value - vals[1]).abs() < 1e-8 * vals[1].abs().max(1.0));
    }

    #[test]
    fn singular_mass_is_rejected() {
        let k = SymBand::identity(60);
        let mut m = SymBand::identity(60);
        m.add(5, 5, -1.0);
        assert!(smallest_eigenpairs(&k, &m, 1, &PencilOptions::default()).is_err());
    }
}
