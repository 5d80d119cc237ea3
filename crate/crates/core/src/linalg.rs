// SPDX-License-Identifier: Apache-2.0

//! Small dense linear algebra: row reduction, Householder QR, one-sided Jacobi
//! SVD, nullspaces and projections.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, o: &Matrix) -> Matrix {
        assert_eq!(self.cols, o.rows);
        let mut out = Matrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..o.cols {
                    out[(i, j)] += a * o[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Reduced row echelon form with partial pivoting. Pivots below
    /// `tol · max|entry|` count as zero. Returns the pivot columns.
    pub fn rref(&self, tol: f64) -> (Matrix, Vec<usize>) {
        let mut a = self.clone();
        let thresh = tol * a.max_abs();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let (best, val) = (r..a.rows)
                .map(|i| (i, a[(i, c)].abs()))
                .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if val <= thresh || val == 0.0 {
                for i in r..a.rows {
                    a[(i, c)] = 0.0;
                }
                continue;
            }
            a.swap_rows(r, best);
            let p = a[(r, c)];
            for v in a.row_mut(r) {
                *v /= p;
            }
            for i in 0..a.rows {
                if i != r {
                    let f = a[(i, c)];
                    if f != 0.0 {
                        for j in 0..a.cols {
                            let t = a[(r, j)];
                            a[(i, j)] -= f * t;
                        }
                        a[(i, c)] = 0.0;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    /// Numerical rank by row reduction with relative pivot threshold `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        if self.rows == 0 || self.cols == 0 || self.max_abs() == 0.0 {
            return 0;
        }
        self.rref(tol).1.len()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Upper-triangular `R` (`min(rows, cols) × cols`) of a Householder QR.
    pub fn qr_r(&self) -> Matrix {
        let mut a = self.clone();
        let (m, n) = (a.rows, a.cols);
        let steps = m.min(n);
        for k in 0..steps {
            let norm = libm::sqrt((k..m).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>());
            if norm == 0.0 {
                continue;
            }
            let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
            let mut v: Vec<f64> = (k..m).map(|i| a[(i, k)]).collect();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            for j in k..n {
                let s: f64 = (k..m).map(|i| v[i - k] * a[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
                for i in k..m {
                    a[(i, j)] -= s * v[i - k];
                }
            }
        }
        let mut r = Matrix::zeros(steps, n);
        for i in 0..steps {
            for j in i..n {
                r[(i, j)] = a[(i, j)];
            }
        }
        r
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Thin SVD `A = U Σ Vᵀ` by one-sided Jacobi.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Left singular vectors as columns (`rows × k`), zero columns for `σ = 0`.
    pub u: Matrix,
    /// Right singular vectors as columns (`cols × cols`).
    pub v: Matrix,
}

const JACOBI_SWEEPS: usize = 60;

/// One-sided Jacobi on the columns of `a`; returns `(A V, V)`.
fn jacobi_columns(mut a: Matrix) -> (Matrix, Matrix) {
    let n = a.cols;
    let mut v = Matrix::identity(n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..a.rows {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..a.rows {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (a, v)
}

impl Svd {
    pub fn new(a: &Matrix) -> Svd {
        // Compress tall matrices to their R factor first; V is unchanged.
        let work = if a.rows > a.cols { a.qr_r() } else { a.clone() };
        let (av, v) = jacobi_columns(work);
        let k = av.cols;
        let mut order: Vec<(usize, f64)> = (0..k).map(|j| (j, norm(&av.column(j)))).collect();
        order.sort_by(|x, y| y.1.total_cmp(&x.1));
        let mut sigma = Vec::with_capacity(k);
        let mut vs = Matrix::zeros(v.rows, k);
        for (new, (old, s)) in order.iter().enumerate() {
            sigma.push(*s);
            for i in 0..v.rows {
                vs[(i, new)] = v[(i, *old)];
            }
        }
        // U from the original matrix so tall inputs get full-height vectors.
        let avs = a.mul(&vs);
        let mut u = Matrix::zeros(a.rows, k);
        for j in 0..k {
            if sigma[j] > 0.0 {
                for i in 0..a.rows {
                    u[(i, j)] = avs[(i, j)] / sigma[j];
                }
            }
        }
        Svd { sigma, u, v: vs }
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `tol · σ_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let cut = tol * self.sigma_max();
        self.sigma.iter().filter(|s| **s > cut && **s > 0.0).count()
    }

    /// Orthonormal nullspace basis: right singular vectors with `σ ≤ tol · σ_max`.
    pub fn nullspace(&self, tol: f64) -> Vec<Vec<f64>> {
        let r = self.rank(tol);
        (r..self.v.cols).map(|j| self.v.column(j)).collect()
    }

    /// Minimum-norm least-squares solution of `A x = b`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Vec<f64> {
        let r = self.rank(tol);
        let mut x = vec![0.0; self.v.rows];
        for j in 0..r {
            let coef = dot(&self.u.column(j), b) / self.sigma[j];
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += coef * self.v[(i, j)];
            }
        }
        x
    }
}

/// Orthonormal basis of `span(vectors)` by modified Gram–Schmidt with
/// reorthogonalization; vectors whose residual falls below `tol · max‖v‖` are dropped.
pub fn orthonormal_basis(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if scale == 0.0 {
        return basis;
    }
    // Pivoted order: largest remaining residual first.
    let mut pool: Vec<Vec<f64>> = vectors.to_vec();
    while !pool.is_empty() {
        let (idx, best) = pool
            .iter()
            .enumerate()
            .map(|(i, v)| (i, norm(v)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol * scale {
            break;
        }
        let mut w = pool.swap_remove(idx);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nw = norm(&w);
        if nw <= tol * scale {
            continue;
        }
        for wi in w.iter_mut() {
            *wi /= nw;
        }
        for v in pool.iter_mut() {
            let c = dot(&w, v);
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi -= c * wi;
            }
        }
        basis.push(w);
    }
    basis
}

/// `‖v − P v‖` where `P` projects onto the span of the orthonormal `basis`.
pub fn projection_residual(basis: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, &w);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
    }
    norm(&w)
}
