mod common;

use common::{brute_force_minimal_change, dot, eliminate, low_rank, max_diff};
use mms_verify::linalg::{
    minimal_change_solve, norm_inf, pivoted_qr, DenseMatrix, DEFAULT_RANK_TOLERANCE,
};
use proptest::prelude::*;

/// Rank-deficient integer-factor matrix, a consistent right-hand side and a nominal vector.
fn deficient_system() -> impl Strategy<Value = (DenseMatrix, Vec<f64>, Vec<f64>)> {
    (2usize..=8)
        .prop_flat_map(|n| (Just(n), 1usize..n))
        .prop_flat_map(|(n, k)| {
            (
                Just(n),
                Just(k),
                prop::collection::vec(-3i32..=3, n * k),
                prop::collection::vec(-3i32..=3, n * k),
                prop::collection::vec(-2.0f64..2.0, n),
                prop::collection::vec(-2.0f64..2.0, n),
            )
        })
        .prop_filter("nonzero matrix", |(_, _, b, c, _, _)| {
            b.iter().any(|&v| v != 0) && c.iter().any(|&v| v != 0)
        })
        .prop_map(|(n, k, b, c, x, u_n)| {
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let c: Vec<f64> = c.into_iter().map(f64::from).collect();
            let a = low_rank(n, k, &b, &c);
            let rhs = a.matvec(&x);
            (a, rhs, u_n)
        })
}

fn scale_of(a: &DenseMatrix, b: &[f64], u: &[f64]) -> f64 {
    a.max_abs() * norm_inf(u) + norm_inf(b) + 1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn minimal_change_is_optimal((a, b, u_n) in deficient_system()) {
        let oracle = eliminate(&a, &b, 1e-10);
        let sol = minimal_change_solve(&a, &b, &u_n, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert_eq!(sol.rank_used, oracle.rank);

        let scale = scale_of(&a, &b, &sol.u_h);
        let resid: Vec<f64> = a.matvec(&sol.u_h).iter().zip(&b).map(|(x, y)| x - y).collect();
        prop_assert!(norm_inf(&resid) <= 1e-10 * scale);

        let brute = brute_force_minimal_change(&a, &b, &u_n, 1e-10);
        prop_assert!(max_diff(&brute, &sol.u_h) <= 1e-8 * (1.0 + norm_inf(&brute)));

        // The change is orthogonal to the nullspace, so no other solution is closer.
        let change: Vec<f64> = sol.u_h.iter().zip(&u_n).map(|(x, y)| x - y).collect();
        let dist2 = dot(&change, &change);
        for z in &oracle.nullspace {
            let zn = dot(z, z).sqrt();
            prop_assert!(dot(&change, z).abs() <= 1e-9 * zn * (1.0 + dist2.sqrt()));
            for t in [-1e-3, 1e-3, -0.5, 1.0] {
                let other: Vec<f64> = change.iter().zip(z).map(|(c, zv)| c + t * zv / zn).collect();
                prop_assert!(dot(&other, &other) >= dist2 - 1e-9 * (1.0 + dist2));
            }
        }
    }

    #[test]
    fn pivoted_qr_is_orthogonal_and_reconstructs((a, _b, _u) in deficient_system()) {
        let qr = pivoted_qr(&a, DEFAULT_RANK_TOLERANCE).unwrap();
        let n = a.rows();
        let qtq = qr.q.transpose().matmul(&qr.q);
        prop_assert!(qtq.max_abs_diff(&DenseMatrix::identity(n)) <= 1e-13);
        let ap = a.matmul(&qr.permutation_matrix());
        prop_assert!(ap.max_abs_diff(&qr.q.matmul(&qr.r)) <= 1e-12 * (1.0 + a.max_abs()));
        for i in 0..n {
            for j in 0..i.min(a.cols()) {
                prop_assert_eq!(qr.r[(i, j)], 0.0);
            }
        }
        let d = qr.diagonal();
        for w in d.windows(2) {
            prop_assert!(w[1].abs() <= w[0].abs() * (1.0 + 1e-12) + 1e-13);
        }
        prop_assert_eq!(qr.rank, common::numerical_rank(&a, 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solution_is_scale_invariant((a, b, u_n) in deficient_system(), c in 1e-3f64..1e3) {
        let base = minimal_change_solve(&a, &b, &u_n, DEFAULT_RANK_TOLERANCE).unwrap();
        let bs: Vec<f64> = b.iter().map(|v| c * v).collect();
        let scaled = minimal_change_solve(&a.scaled(c), &bs, &u_n, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert_eq!(base.rank_used, scaled.rank_used);
        prop_assert!(max_diff(&base.u_h, &scaled.u_h) <= 1e-10 * (1.0 + norm_inf(&base.u_h)));
    }

    #[test]
    fn solve_is_deterministic((a, b, u_n) in deficient_system()) {
        let first = minimal_change_solve(&a, &b, &u_n, DEFAULT_RANK_TOLERANCE).unwrap();
        let second = minimal_change_solve(&a, &b, &u_n, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn rank_one_outer_product(
        x in prop::collection::vec(0.5f64..2.0, 5),
        y in prop::collection::vec(-2.0f64..2.0, 5),
        u_n in prop::collection::vec(-1.0f64..1.0, 5),
        s in -3.0f64..3.0,
    ) {
        prop_assume!(dot(&y, &y) > 0.1);
        let a = DenseMatrix::from_fn(5, 5, |i, j| x[i] * y[j]);
        let b: Vec<f64> = x.iter().map(|v| s * v).collect();
        let sol = minimal_change_solve(&a, &b, &u_n, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert_eq!(sol.rank_used, 1);
        // Project u_n onto the hyperplane yᵀu = s.
        let shift = (s - dot(&y, &u_n)) / dot(&y, &y);
        let expect: Vec<f64> = u_n.iter().zip(&y).map(|(u, yv)| u + shift * yv).collect();
        prop_assert!(max_diff(&expect, &sol.u_h) <= 1e-12);
    }

    #[test]
    fn rank_two_six_by_six(
        b in prop::collection::vec(-3i32..=3, 12),
        c in prop::collection::vec(-3i32..=3, 12),
        x in prop::collection::vec(-1.0f64..1.0, 6),
        u_n in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let c: Vec<f64> = c.into_iter().map(f64::from).collect();
        let a = low_rank(6, 2, &b, &c);
        prop_assume!(a.max_abs() > 0.0);
        let rhs = a.matvec(&x);
        let sol = minimal_change_solve(&a, &rhs, &u_n, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert!(sol.rank_used <= 2);
        let brute = brute_force_minimal_change(&a, &rhs, &u_n, 1e-10);
        prop_assert!(max_diff(&brute, &sol.u_h) <= 1e-9 * (1.0 + norm_inf(&brute)));
    }
}
