//! Independent oracles shared by the integration tests.
//!
//! Nothing here goes through Householder QR: rank and nullspace come from
//! Gaussian elimination with full pivoting, and the minimal-change solution is
//! found by minimizing over an explicit nullspace parametrization.

#![allow(dead_code, clippy::needless_range_loop)]

use mms_verify::linalg::DenseMatrix;

pub struct Elimination {
    pub rank: usize,
    /// Particular solution of `A x = b` (free variables set to zero).
    pub particular: Vec<f64>,
    /// Columns span the nullspace of `A`.
    pub nullspace: Vec<Vec<f64>>,
}

/// Reduced row echelon form with full pivoting on `[A | b]`.
pub fn eliminate(a: &DenseMatrix, b: &[f64], rel_tol: f64) -> Elimination {
    let (m, n) = (a.rows(), a.cols());
    let mut w: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i]);
            r
        })
        .collect();
    let mut col_of: Vec<usize> = (0..n).collect();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut rank = 0;
    while rank < m.min(n) {
        let mut best = (0.0, rank, rank);
        for i in rank..m {
            for j in rank..n {
                let v = w[i][j].abs();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        if best.0 <= rel_tol * scale {
            break;
        }
        w.swap(rank, best.1);
        for row in w.iter_mut() {
            row.swap(rank, best.2);
        }
        col_of.swap(rank, best.2);
        let p = w[rank][rank];
        for v in w[rank].iter_mut() {
            *v /= p;
        }
        let pivot_row = w[rank].clone();
        for (i, row) in w.iter_mut().enumerate() {
            if i != rank {
                let f = row[rank];
                if f != 0.0 {
                    for (x, y) in row.iter_mut().zip(&pivot_row) {
                        *x -= f * y;
                    }
                }
            }
        }
        rank += 1;
    }
    let mut particular = vec![0.0; n];
    for k in 0..rank {
        particular[col_of[k]] = w[k][n];
    }
    let nullspace = (rank..n)
        .map(|f| {
            let mut z = vec![0.0; n];
            z[col_of[f]] = 1.0;
            for k in 0..rank {
                z[col_of[k]] = -w[k][f];
            }
            z
        })
        .collect();
    Elimination {
        rank,
        particular,
        nullspace,
    }
}

pub fn numerical_rank(a: &DenseMatrix, rel_tol: f64) -> usize {
    eliminate(a, &vec![0.0; a.rows()], rel_tol).rank
}

/// Dense symmetric solve by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Vec<f64> {
    let n = r.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        m.swap(k, p);
        r.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            r[i] -= f * r[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (r[k] - s) / m[k][k];
    }
    x
}

/// `argmin ‖x − u_n‖₂` over `x = x_p + Z c`, via the normal equations in `c`.
pub fn brute_force_minimal_change(
    a: &DenseMatrix,
    b: &[f64],
    u_n: &[f64],
    rel_tol: f64,
) -> Vec<f64> {
    let e = eliminate(a, b, rel_tol);
    let z = &e.nullspace;
    if z.is_empty() {
        return e.particular;
    }
    let k = z.len();
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&z[i], &z[j])).collect())
        .collect();
    let diff: Vec<f64> = u_n.iter().zip(&e.particular).map(|(u, p)| u - p).collect();
    let rhs: Vec<f64> = z.iter().map(|zi| dot(zi, &diff)).collect();
    let c = solve_dense(gram, rhs);
    let mut x = e.particular.clone();
    for (zi, ci) in z.iter().zip(&c) {
        for (xv, zv) in x.iter_mut().zip(zi) {
            *xv += ci * zv;
        }
    }
    x
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `B Cᵀ` with `B`, `C` of size `n × k`, stored row-major.
pub fn low_rank(n: usize, k: usize, b: &[f64], c: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        (0..k).map(|l| b[i * k + l] * c[j * k + l]).sum()
    })
}
