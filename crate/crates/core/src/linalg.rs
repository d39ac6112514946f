//! Dense linear algebra: Householder QR with column pivoting and the
//! minimal-change solve of a practically singular square system.
//!
//! The minimal-change solution of `A u = b` is the feasible point closest (in
//! the Euclidean norm) to a nominal vector `u_n`. With `Aᵀ P = Q₁ R₁` it reads
//!
//! ```text
//! u_h = Q₁ u' − Q₁ Q₁ᵀ u_n + u_n,    u' = (R₁ᵀ)† Pᵀ b
//! ```
//!
//! so only the leading `rank` columns of `Q` are ever needed.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff on `|R_kk| / |R_11|` used when no tolerance is supplied.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// Dense real matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        let m = DenseMatrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::NonFinite {
                row: k / self.cols,
                col: k % self.cols,
            }),
            None => Ok(()),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, c: f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Max-abs entry of `self − other`.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Columns `start..end` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> DenseMatrix {
        Self::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of `A P = Q R` with column pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotedQr {
    /// Orthogonal `rows × rows` factor.
    pub q: DenseMatrix,
    /// Upper-trapezoidal `rows × cols` factor.
    pub r: DenseMatrix,
    /// `perm[k]` is the original column placed at position `k`.
    pub perm: Vec<usize>,
    pub rank: usize,
    pub rank_tolerance: f64,
}

impl PivotedQr {
    /// The permutation as an explicit matrix `P` with `(A P)[:, k] = A[:, perm[k]]`.
    pub fn permutation_matrix(&self) -> DenseMatrix {
        let n = self.perm.len();
        let mut p = DenseMatrix::zeros(n, n);
        for (k, &c) in self.perm.iter().enumerate() {
            p[(c, k)] = 1.0;
        }
        p
    }

    /// Leading `rank` columns of `Q` (an orthonormal basis of the range of `A`).
    pub fn q1(&self) -> DenseMatrix {
        self.q.columns(0, self.rank)
    }

    /// Trailing columns of `Q`. For a factorization of `Aᵀ` these span the
    /// nullspace of `A`.
    pub fn q2(&self) -> DenseMatrix {
        self.q.columns(self.rank, self.q.cols())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.r.rows().min(self.r.cols()))
            .map(|k| self.r[(k, k)])
            .collect()
    }
}

/// Solution of a practically singular system closest to a nominal vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalChangeSolution {
    pub u_h: Vec<f64>,
    pub rank_used: usize,
    /// `‖A u_h − b‖_∞`.
    pub residual_norm: f64,
}

struct Reflector {
    v: Vec<f64>,
    beta: f64,
}

/// Working state of a Householder factorization, stored column-major.
struct Householder {
    rows: usize,
    cols: Vec<Vec<f64>>,
    reflectors: Vec<Reflector>,
    perm: Vec<usize>,
    rank: usize,
}

fn check_tolerance(rank_tolerance: f64) -> Result<()> {
    if !(rank_tolerance > 0.0 && rank_tolerance < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must lie in (0, 1), got {rank_tolerance}"
        )));
    }
    Ok(())
}

impl Householder {
    /// Runs column-pivoted Householder QR on `a`. When `truncate` is set the
    /// sweep stops at the numerical rank; otherwise it runs to `min(m, n)`.
    fn factor(a: &DenseMatrix, rank_tolerance: f64, truncate: bool) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::new();
        let mut threshold = 0.0;
        let mut rank = None;
        let steps = m.min(n);

        for k in 0..steps {
            // Pivot: largest remaining column norm, lowest index on ties.
            let mut best = k;
            let mut best_norm = -1.0;
            for (j, col) in cols.iter().enumerate().skip(k) {
                let nrm = norm2(&col[k..]);
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            if k == 0 {
                threshold = rank_tolerance * best_norm;
            }
            if rank.is_none() && (best_norm <= threshold || best_norm == 0.0) {
                rank = Some(k);
                if truncate {
                    break;
                }
            }
            cols.swap(k, best);
            perm.swap(k, best);

            let x = &cols[k][k..];
            let alpha = if x[0] >= 0.0 { -best_norm } else { best_norm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vtv = dot(&v, &v);
            let beta = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };

            if beta != 0.0 {
                for col in cols.iter_mut().skip(k + 1) {
                    let tail = &mut col[k..];
                    let s = beta * dot(&v, tail);
                    if s != 0.0 {
                        for (t, vi) in tail.iter_mut().zip(&v) {
                            *t -= s * vi;
                        }
                    }
                }
                let col = &mut cols[k];
                col[k] = alpha;
                for t in &mut col[k + 1..] {
                    *t = 0.0;
                }
            }
            reflectors.push(Reflector { v, beta });
        }

        Householder {
            rows: m,
            rank: rank.unwrap_or(steps),
            cols,
            reflectors,
            perm,
        }
    }

    /// `Q e_c` for the accumulated reflectors.
    fn q_column(&self, c: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.rows];
        e[c] = 1.0;
        for (k, h) in self.reflectors.iter().enumerate().rev() {
            let tail = &mut e[k..];
            let s = h.beta * dot(&h.v, tail);
            if s != 0.0 {
                for (t, vi) in tail.iter_mut().zip(&h.v) {
                    *t -= s * vi;
                }
            }
        }
        e
    }

    fn r_entry(&self, i: usize, j: usize) -> f64 {
        if i <= j && i < self.reflectors.len() {
            self.cols[j][i]
        } else {
            0.0
        }
    }
}

/// Column-pivoted Householder QR, `A P = Q R`.
///
/// Pivoting picks the remaining column of largest norm (lowest index on ties),
/// so `|R_kk|` is non-increasing. The reported rank counts diagonal entries
/// with `|R_kk| > rank_tolerance · |R_11|`.
pub fn pivoted_qr(a: &DenseMatrix, rank_tolerance: f64) -> Result<PivotedQr> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::EmptyMatrix {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    a.check_finite()?;
    check_tolerance(rank_tolerance)?;

    let f = Householder::factor(a, rank_tolerance, false);
    let m = a.rows();
    let mut q = DenseMatrix::zeros(m, m);
    for c in 0..m {
        for (i, v) in f.q_column(c).into_iter().enumerate() {
            q[(i, c)] = v;
        }
    }
    let r = DenseMatrix::from_fn(m, a.cols(), |i, j| f.r_entry(i, j));
    let r11 = r[(0, 0)].abs();
    let rank = (0..m.min(a.cols()))
        .take_while(|&k| r[(k, k)].abs() > rank_tolerance * r11)
        .count();
    Ok(PivotedQr {
        q,
        r,
        perm: f.perm,
        rank,
        rank_tolerance,
    })
}

/// Minimal-change solution of the square system `A u = b` nearest `u_nominal`.
///
/// Factors `Aᵀ P = Q₁ R₁` up to the numerical rank, solves the leading
/// `rank × rank` block of `R₁ᵀ u' = Pᵀ b` by forward substitution and returns
/// `u_h = u_n + Q₁ (u' − Q₁ᵀ u_n)`. `Q₂` is never formed.
///
/// Fails with [`Error::Inconsistent`] when
/// `‖A u_h − b‖_∞ > 1e−8 (‖A‖_max ‖u_h‖_∞ + ‖b‖_∞)`.
pub fn minimal_change_solve(
    a: &DenseMatrix,
    b: &[f64],
    u_nominal: &[f64],
    rank_tolerance: f64,
) -> Result<MinimalChangeSolution> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "minimal-change solve needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.len() != n || u_nominal.len() != n {
        return Err(Error::Dimension(format!(
            "expected vectors of length {n}, got b: {}, u_nominal: {}",
            b.len(),
            u_nominal.len()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyMatrix { rows: 0, cols: 0 });
    }
    a.check_finite()?;
    check_tolerance(rank_tolerance)?;

    let at = a.transpose();
    let f = Householder::factor(&at, rank_tolerance, true);
    let rank = f.rank;

    // R₁ᵀ is lower triangular on its leading block: row k of R₁ᵀ is column k of R₁.
    let mut u_prime = vec![0.0; rank];
    for k in 0..rank {
        let rhs = b[f.perm[k]];
        let mut s = rhs;
        for (l, ul) in u_prime.iter().enumerate().take(k) {
            s -= f.r_entry(l, k) * ul;
        }
        u_prime[k] = s / f.r_entry(k, k);
    }

    let q1: Vec<Vec<f64>> = (0..rank).map(|c| f.q_column(c)).collect();
    let mut u_h = u_nominal.to_vec();
    for (qc, up) in q1.iter().zip(&u_prime) {
        let coef = up - dot(qc, u_nominal);
        for (u, q) in u_h.iter_mut().zip(qc) {
            *u += coef * q;
        }
    }

    let ax = a.matvec(&u_h);
    let residual_norm = ax
        .iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let bound = 1e-8 * (a.max_abs() * norm_inf(&u_h) + norm_inf(b));
    if residual_norm.is_nan() || residual_norm > bound {
        return Err(Error::Inconsistent {
            residual: residual_norm,
            bound,
        });
    }
    Ok(MinimalChangeSolution {
        u_h,
        rank_used: rank,
        residual_norm,
    })
}
