mod common;

use mms_verify::efie::{assemble_efie, nominal_coefficients_efie, ManufacturedEfie};
use mms_verify::injection::{self, InjectionSpec, LevelContext};
use mms_verify::mesh::{build_mesh, TriangleMesh};
use mms_verify::quadrature::TriangleRule;
use mms_verify::rwg::RwgSpace;

/// `a(φ_j, φ_i)` and `a(u, φ_i)` by a plain double loop over a degree-`deg` rule.
fn brute_force(mf: &ManufacturedEfie, space: &RwgSpace, deg: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rule = TriangleRule::new(deg);
    let mesh = &space.mesh;
    let pts: Vec<(usize, [f64; 2], f64)> = (0..mesh.triangle_count())
        .flat_map(|t| {
            let (p, w) = rule.map(&mesh.corners(t));
            p.into_iter().zip(w).map(move |(x, w)| (t, x, w))
        })
        .collect();
    let n = space.len();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        for &(tx, x, wx) in &pts {
            let fi = space.eval(i, x);
            let di = space.div(i, tx);
            if fi == [0.0, 0.0] && di == 0.0 {
                continue;
            }
            for &(ty, y, wy) in &pts {
                let g = wx * wy * mf.kernel.eval(x, y);
                let u = mf.eval(y);
                let du = (mf.div_u)(y);
                b[i] += g * (mf.alpha * (fi[0] * u[0] + fi[1] * u[1]) + mf.beta * di * du);
                for (j, aij) in a[i].iter_mut().enumerate() {
                    let fj = space.eval(j, y);
                    let dj = space.div(j, ty);
                    *aij += g * (mf.alpha * (fi[0] * fj[0] + fi[1] * fj[1]) + mf.beta * di * dj);
                }
            }
        }
    }
    (a, b)
}

#[test]
fn two_triangle_entry_matches_brute_force() {
    let mesh = TriangleMesh::from_parts(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .unwrap();
    let mf = ManufacturedEfie::standard(1.0, 1.0);
    let sys = assemble_efie(&mf, &mesh, 6).unwrap();
    assert_eq!(sys.space.len(), 1);
    let (a, b) = brute_force(&mf, &sys.space, 12);
    let h2 = sys.h * sys.h;
    assert!((sys.a[(0, 0)] * h2 - a[0][0]).abs() <= 1e-13 * a[0][0].abs());
    assert!((sys.b[0] * h2 - b[0]).abs() <= 1e-9 * b[0].abs().max(1.0));
}

#[test]
fn small_mesh_matches_brute_force() {
    let mesh = build_mesh(2).unwrap();
    for (alpha, beta) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        let mf = ManufacturedEfie::standard(alpha, beta);
        let sys = assemble_efie(&mf, &mesh, 6).unwrap();
        let (a, b) = brute_force(&mf, &sys.space, 10);
        let h2 = sys.h * sys.h;
        let n = sys.space.len();
        for i in 0..n {
            for (j, aij) in a[i].iter().enumerate() {
                assert!((sys.a[(i, j)] * h2 - aij).abs() <= 1e-12);
            }
            assert!((sys.b[i] * h2 - b[i]).abs() <= 1e-8);
        }
    }
}

#[test]
fn interpolant_converges_at_first_order() {
    let mf = ManufacturedEfie::standard(1.0, 1.0);
    let errs: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&m| {
            let space = RwgSpace::new(&build_mesh(m).unwrap());
            let c = nominal_coefficients_efie(&mf, &space);
            let mut worst: f64 = 0.0;
            for a in 0..37 {
                for b in 0..19 {
                    let x = [
                        -1.0 + 2.0 * (a as f64 + 0.31) / 37.0,
                        (b as f64 + 0.27) / 19.0,
                    ];
                    let v = space.eval_expansion(&c, x);
                    let u = mf.eval(x);
                    worst = worst.max((v[0] - u[0]).abs().max((v[1] - u[1]).abs()));
                }
            }
            worst
        })
        .collect();
    for w in errs.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!((0.8..1.3).contains(&p), "{errs:?}");
    }
}

#[test]
fn kernel_rank_is_bounded() {
    for (alpha, beta) in [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0)] {
        let mf = ManufacturedEfie::standard(alpha, beta);
        for m in [4, 8] {
            let sys = assemble_efie(&mf, &build_mesh(m).unwrap(), 6).unwrap();
            let rank = common::numerical_rank(&sys.a, 1e-10);
            assert!(rank <= 12, "({alpha},{beta}) m={m}: rank {rank}");
        }
    }
}

#[test]
fn manufactured_solution_is_tangential_on_the_boundary() {
    assert!(ManufacturedEfie::standard(1.0, 1.0).max_boundary_normal_trace(200) <= 1e-12);
}

#[test]
fn spatial_injection_stays_put_under_refinement() {
    let spec = InjectionSpec::new("spatial:both".parse().unwrap(), 0.01, 0.0).unwrap();
    for m in [2, 4, 8, 16] {
        let space = RwgSpace::new(&build_mesh(m).unwrap());
        let inj = injection::resolve(&spec, &LevelContext::Efie { space: &space })
            .unwrap()
            .unwrap();
        assert_eq!(inj.row, inj.col);
        let mid = space.basis[inj.col].midpoint;
        let dist = ((mid[0]).powi(2) + (mid[1] - 0.5).powi(2)).sqrt();
        assert!(dist <= space.mesh.h, "m={m}: {mid:?}");
    }
}

#[test]
fn fixed_injection_drifts_toward_the_corner() {
    let spec = InjectionSpec::new("fixed:1,2".parse().unwrap(), 0.01, 0.0).unwrap();
    let mut prev = f64::MAX;
    for m in [2, 4, 8, 16] {
        let space = RwgSpace::new(&build_mesh(m).unwrap());
        let inj = injection::resolve(&spec, &LevelContext::Efie { space: &space })
            .unwrap()
            .unwrap();
        assert_eq!((inj.row, inj.col), (0, 1));
        let mid = space.basis[1].midpoint;
        let d = ((mid[0] + 1.0).powi(2) + mid[1].powi(2)).sqrt();
        assert!(d < prev);
        prev = d;
    }
}
