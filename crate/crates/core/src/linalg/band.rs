use nalgebra::DMatrix;

use crate::error::{KornError, Result};

/// Symmetric matrix stored as its lower band.
///
/// Entry `(i, j)` with `i - bw <= j <= i` lives at `data[i * (bw + 1) + bw + j - i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        for i in 0..n {
            m.add(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), 0);
        for (i, &v) in d.iter().enumerate() {
            m.add(i, i, v);
        }
        m
    }

    /// Band of a dense symmetric matrix; entries outside `bw` must be zero.
    pub fn from_dense(a: &DMatrix<f64>, bw: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(KornError::InvalidArgument("matrix is not square".into()));
        }
        let mut m = Self::zeros(n, bw);
        for i in 0..n {
            for j in 0..=i {
                let v = a[(i, j)];
                if i - j > m.bw {
                    if v != 0.0 {
                        return Err(KornError::InvalidArgument(format!("entry ({i}, {j}) outside the band")));
                    }
                } else {
                    m.data[i * (m.bw + 1) + m.bw + j - i] = v;
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.bw).then(|| i * (self.bw + 1) + self.bw + j - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` to `(i, j)` (and thereby to `(j, i)`).
    ///
    /// # Panics
    /// If `(i, j)` lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .idx(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside bandwidth {}", self.bw));
        self.data[k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Number of stored entries of the full symmetric matrix that are nonzero.
    pub fn nnz(&self) -> usize {
        let mut count = 0;
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                if self.get(i, j) != 0.0 {
                    count += if i == j { 1 } else { 2 };
                }
            }
        }
        count
    }

    /// Nonzero entries of the full matrix in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            let hi = (i + self.bw).min(self.n.saturating_sub(1));
            for j in i.saturating_sub(self.bw)..=hi {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        let w = self.bw + 1;
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            let j0 = i.saturating_sub(self.bw);
            let off = self.bw + j0 - i;
            let mut acc = row[self.bw] * x[i];
            for (t, j) in (j0..i).enumerate() {
                let a = row[off + t];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                let v = self.get(i, j);
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        d
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &SymBand) -> SymBand {
        assert_eq!(self.n, other.n);
        let bw = self.bw.max(other.bw);
        let mut out = SymBand::zeros(self.n, bw);
        for i in 0..self.n {
            for j in i.saturating_sub(bw)..=i {
                let v = self.get(i, j) + s * other.get(i, j);
                if v != 0.0 {
                    out.add(i, j, v);
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> SymBand {
        SymBand {
            n: self.n,
            bw: self.bw,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Principal submatrix on the rows/columns where `keep` is true.
    pub fn restrict(&self, keep: &[bool]) -> SymBand {
        assert_eq!(keep.len(), self.n);
        let map: Vec<Option<usize>> = keep
            .iter()
            .scan(0usize, |next, &k| {
                Some(if k {
                    *next += 1;
                    Some(*next - 1)
                } else {
                    None
                })
            })
            .collect();
        let m = keep.iter().filter(|&&k| k).count();
        let mut out = SymBand::zeros(m, self.bw);
        for i in 0..self.n {
            let Some(ni) = map[i] else { continue };
            for j in i.saturating_sub(self.bw)..=i {
                if let Some(nj) = map[j] {
                    let v = self.get(i, j);
                    if v != 0.0 {
                        out.add(ni, nj, v);
                    }
                }
            }
        }
        out
    }

    /// Cholesky factor; fails on the first pivot that is not positive.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        self.cholesky_with_tol(0.0)
    }

    /// Cholesky factor; a pivot at or below `tol * max|diag|` counts as a
    /// failure, which makes the factorization rank revealing for PSD input.
    pub fn cholesky_with_tol(&self, tol: f64) -> Result<BandCholesky> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let floor = tol * self.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut l = self.data.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = l[i * w + bw + j - i];
                for k in k0..j {
                    sum -= l[i * w + bw + k - i] * l[j * w + bw + k - j];
                }
                if i == j {
                    if !(sum > floor) {
                        return Err(KornError::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    l[i * w + bw] = sum.sqrt();
                } else {
                    l[i * w + bw + j - i] = sum / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }
}

/// Lower-triangular band factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest diagonal entry of `L` squared (the smallest pivot).
    pub fn min_pivot(&self) -> f64 {
        (0..self.n)
            .map(|i| self.l[i * (self.bw + 1) + self.bw].powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    /// Overwrites `b` with `A^{-1} b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let mut s = b[i];
            for j in j0..i {
                s -= self.l[i * w + bw + j - i] * b[j];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            b[i] /= self.l[i * w + bw];
            let bi = b[i];
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                b[j] -= self.l[i * w + bw + j - i] * bi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymBand {
        let mut a = SymBand::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn matvec_matches_dense() {
        let mut a = SymBand::zeros(6, 2);
        let mut v = 1.0;
        for i in 0..6usize {
            for j in i.saturating_sub(2)..=i {
                a.add(i, j, v);
                v += 0.7;
            }
        }
        let x: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let y = a.apply(&x);
        let yd = a.to_dense() * nalgebra::DVector::from_column_slice(&x);
        for i in 0..6 {
            assert!((y[i] - yd[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_solves() {
        let a = laplacian(50);
        let b: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        let x = a.cholesky().unwrap().solve(&b);
        let r = a.apply(&x);
        for i in 0..50 {
            assert!((r[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_and_singular() {
        let mut a = laplacian(4);
        a.add(3, 3, -3.0);
        assert!(matches!(a.cholesky(), Err(KornError::NotPositiveDefinite { .. })));
        // Neumann Laplacian: constant null vector.
        let mut b = laplacian(5);
        b.add(0, 0, -1.0);
        b.add(4, 4, -1.0);
        assert!(b.cholesky_with_tol(1e-10).is_err());
    }

    #[test]
    fn restrict_drops_rows_and_columns() {
        let a = laplacian(5);
        let r = a.restrict(&[false, true, true, false, true]);
        assert_eq!(r.dim(), 3);
        assert_eq!(r.get(0, 1), -1.0);
        assert_eq!(r.get(1, 2), 0.0);
        assert_eq!(r.get(2, 2), 2.0);
    }

    #[test]
    fn triplets_cover_both_triangles() {
        let a = laplacian(3);
        assert_eq!(a.nnz(), 7);
        assert_eq!(a.triplets().len(), 7);
    }
}
