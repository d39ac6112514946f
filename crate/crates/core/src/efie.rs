//! Galerkin discretization of the EFIE bilinear form with a manufactured
//! (smooth) Green's function on RWG elements.
//!
//! ```text
//! a(u, v) = α ∫_S v(x) · ∫_S u(x') G(x, x') dS' dS
//!         + β ∫_S ∇·v(x) ∫_S ∇'·u(x') G(x, x') dS' dS
//! ```
//!
//! Matrix rows are divided by `h²`. Since every RWG function is affine on a
//! triangle, each matrix entry reduces to a handful of kernel moments per
//! triangle pair, which are computed once with the product rule and reused.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::mesh::{Point, TriangleMesh};
use crate::quadrature::TriangleRule;
use crate::rwg::RwgSpace;

/// Exactness degree for the matrix integrals.
pub const DEFAULT_QUAD_DEGREE: usize = 6;
/// Extra degree granted to integrals involving the manufactured solution.
pub const RHS_EXTRA_DEGREE: usize = 4;

pub type VectorField = Arc<dyn Fn(Point) -> Point + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Manufactured Green's function.
#[derive(Clone)]
pub enum Kernel {
    /// `G(x, x') = 1 − ‖x − x'‖² / scale`.
    Paraboloid {
        scale: f64,
    },
    Custom(Arc<dyn Fn(Point, Point) -> f64 + Send + Sync>),
}

impl Kernel {
    pub fn eval(&self, x: Point, y: Point) -> f64 {
        match self {
            Kernel::Paraboloid { scale } => paraboloid(*scale, x, y),
            Kernel::Custom(f) => f(x, y),
        }
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Paraboloid { scale } => write!(f, "Paraboloid {{ scale: {scale} }}"),
            Kernel::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[inline(always)]
fn paraboloid(scale: f64, x: Point, y: Point) -> f64 {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    1.0 - (dx * dx + dy * dy) / scale
}

/// Manufactured solution, its divergence, the kernel and the form constants.
#[derive(Clone)]
pub struct ManufacturedEfie {
    pub label: String,
    pub u: VectorField,
    pub div_u: ScalarField,
    pub alpha: f64,
    pub beta: f64,
    pub kernel: Kernel,
}

impl fmt::Debug for ManufacturedEfie {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedEfie")
            .field("label", &self.label)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("kernel", &self.kernel)
            .finish()
    }
}

/// Corners of the rectangular domain `[-1, 1] × [0, 1]`, counter-clockwise.
pub const DOMAIN_CORNERS: [Point; 4] = [[-1.0, 0.0], [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]];

impl ManufacturedEfie {
    /// `u = (cos(πx/2) cos(πy/4), cos(πx/4) sin(πy))`, `G = 1 − ‖x − x'‖²/5`.
    pub fn standard(alpha: f64, beta: f64) -> Self {
        ManufacturedEfie {
            label: "standard".into(),
            u: Arc::new(|[x, y]| {
                [
                    (PI * x / 2.0).cos() * (PI * y / 4.0).cos(),
                    (PI * x / 4.0).cos() * (PI * y).sin(),
                ]
            }),
            div_u: Arc::new(|[x, y]| {
                -PI / 2.0 * (PI * x / 2.0).sin() * (PI * y / 4.0).cos()
                    + PI * (PI * x / 4.0).cos() * (PI * y).cos()
            }),
            alpha,
            beta,
            kernel: Kernel::Paraboloid { scale: 5.0 },
        }
    }

    pub fn with_coefficients(&self, alpha: f64, beta: f64) -> Self {
        ManufacturedEfie {
            alpha,
            beta,
            ..self.clone()
        }
    }

    pub fn eval(&self, x: Point) -> Point {
        (self.u)(x)
    }

    /// Largest `|u · n̂|` over `samples` points spread evenly along the boundary.
    pub fn max_boundary_normal_trace(&self, samples: usize) -> f64 {
        let normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let lengths = [2.0, 1.0, 2.0, 1.0];
        let perimeter: f64 = lengths.iter().sum();
        let mut worst: f64 = 0.0;
        for k in 0..samples {
            let mut s = perimeter * (k as f64 + 0.5) / samples as f64;
            let mut side = 0;
            while s > lengths[side] {
                s -= lengths[side];
                side += 1;
            }
            let (a, b) = (DOMAIN_CORNERS[side], DOMAIN_CORNERS[(side + 1) % 4]);
            let t = s / lengths[side];
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let u = self.eval(x);
            let n = normals[side];
            worst = worst.max((u[0] * n[0] + u[1] * n[1]).abs());
        }
        worst
    }
}

/// Assembled EFIE system, rows divided by `h²`.
#[derive(Debug, Clone)]
pub struct EfieSystem {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub space: Arc<RwgSpace>,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// The `α` and `β` parts of the matrix and right-hand side, each already
/// divided by `h²`. Any `(α, β)` system is a linear combination of them.
#[derive(Debug, Clone)]
pub struct EfieParts {
    pub space: Arc<RwgSpace>,
    pub h: f64,
    pub quad_degree: usize,
    pub a_vector: DenseMatrix,
    pub a_divergence: DenseMatrix,
    pub b_vector: Vec<f64>,
    pub b_divergence: Vec<f64>,
}

/// Quadrature points of every triangle, flattened.
struct MeshRule {
    points: Vec<Vec<Point>>,
    weights: Vec<Vec<f64>>,
}

impl MeshRule {
    fn new(mesh: &TriangleMesh, degree: usize) -> Self {
        let rule = TriangleRule::new(degree);
        let (points, weights) = (0..mesh.triangle_count())
            .map(|t| rule.map(&mesh.corners(t)))
            .unzip();
        MeshRule { points, weights }
    }
}

/// Kernel moments of a triangle pair `(T, T')`:
/// `[∬G, ∬x G (2), ∬x' G (2), ∬ x·x' G]`.
type Moments = [f64; 6];

fn pair_moments<K: Fn(Point, Point) -> f64>(
    kernel: &K,
    xs: &[Point],
    ws: &[f64],
    ys: &[Point],
    vs: &[f64],
) -> Moments {
    let mut m = [0.0; 6];
    for (x, w) in xs.iter().zip(ws) {
        let mut g = 0.0;
        let mut gy = [0.0, 0.0];
        for (y, v) in ys.iter().zip(vs) {
            let k = v * kernel(*x, *y);
            g += k;
            gy[0] += k * y[0];
            gy[1] += k * y[1];
        }
        m[0] += w * g;
        m[1] += w * x[0] * g;
        m[2] += w * x[1] * g;
        m[3] += w * gy[0];
        m[4] += w * gy[1];
        m[5] += w * (x[0] * gy[0] + x[1] * gy[1]);
    }
    m
}

impl EfieParts {
    pub fn assemble(
        mf: &ManufacturedEfie,
        mesh: &TriangleMesh,
        quad_degree: usize,
    ) -> Result<Self> {
        if quad_degree < 5 {
            return Err(Error::InvalidArgument(format!(
                "quadrature degree must be at least 5, got {quad_degree}"
            )));
        }
        match &mf.kernel {
            Kernel::Paraboloid { scale } => {
                let s = *scale;
                Self::assemble_with(mf, mesh, quad_degree, &move |x, y| paraboloid(s, x, y))
            }
            Kernel::Custom(f) => {
                let f = f.clone();
                Self::assemble_with(mf, mesh, quad_degree, &move |x, y| f(x, y))
            }
        }
    }

    fn assemble_with<K>(
        mf: &ManufacturedEfie,
        mesh: &TriangleMesh,
        quad_degree: usize,
        kernel: &K,
    ) -> Result<Self>
    where
        K: Fn(Point, Point) -> f64 + Sync,
    {
        let space = Arc::new(RwgSpace::new(mesh));
        let nt = mesh.triangle_count();
        let n = space.len();
        if n == 0 {
            return Err(Error::InvalidArgument("mesh has no interior edges".into()));
        }
        let h = mesh.h;
        let inv_h2 = 1.0 / (h * h);

        // Matrix: moments per triangle pair, then a fixed-order gather per entry.
        let rule = MeshRule::new(mesh, quad_degree);
        let moments: Vec<Moments> = (0..nt)
            .into_par_iter()
            .flat_map_iter(|t| {
                let rule = &rule;
                (0..nt).map(move |s| {
                    pair_moments(
                        kernel,
                        &rule.points[t],
                        &rule.weights[t],
                        &rule.points[s],
                        &rule.weights[s],
                    )
                })
            })
            .collect();

        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let bi = &space.basis[i];
                let mut vec_row = vec![0.0; n];
                let mut div_row = vec![0.0; n];
                for (j, bj) in space.basis.iter().enumerate() {
                    let mut av = 0.0;
                    let mut ad = 0.0;
                    for si in 0..2 {
                        let (ci, p) = bi.affine(si);
                        let t = bi.triangles[si];
                        for sj in 0..2 {
                            let (cj, q) = bj.affine(sj);
                            let m = &moments[t * nt + bj.triangles[sj]];
                            let dotted =
                                m[5] - (q[0] * m[1] + q[1] * m[2]) - (p[0] * m[3] + p[1] * m[4])
                                    + (p[0] * q[0] + p[1] * q[1]) * m[0];
                            av += ci * cj * dotted;
                            ad += 4.0 * ci * cj * m[0];
                        }
                    }
                    vec_row[j] = av * inv_h2;
                    div_row[j] = ad * inv_h2;
                }
                (vec_row, div_row)
            })
            .collect();
        drop(moments);
        let mut a_vector = DenseMatrix::zeros(n, n);
        let mut a_divergence = DenseMatrix::zeros(n, n);
        for (i, (vr, dr)) in rows.into_iter().enumerate() {
            for j in 0..n {
                a_vector[(i, j)] = vr[j];
                a_divergence[(i, j)] = dr[j];
            }
        }

        // Right-hand side: potentials of u and ∇·u at every outer point.
        let rhs_rule = MeshRule::new(mesh, quad_degree + RHS_EXTRA_DEGREE);
        let mut src_pts = Vec::new();
        let mut src_u = Vec::new();
        let mut src_div = Vec::new();
        for t in 0..nt {
            for (y, w) in rhs_rule.points[t].iter().zip(&rhs_rule.weights[t]) {
                let u = (mf.u)(*y);
                src_pts.push(*y);
                src_u.push([w * u[0], w * u[1]]);
                src_div.push(w * (mf.div_u)(*y));
            }
        }
        // Per triangle, per outer point: (∫ u G, ∫ ∇·u G).
        let potentials: Vec<Vec<(Point, f64)>> = (0..nt)
            .into_par_iter()
            .map(|t| {
                rhs_rule.points[t]
                    .iter()
                    .map(|x| {
                        let mut wu = [0.0, 0.0];
                        let mut wd = 0.0;
                        for ((y, su), sd) in src_pts.iter().zip(&src_u).zip(&src_div) {
                            let g = kernel(*x, *y);
                            wu[0] += su[0] * g;
                            wu[1] += su[1] * g;
                            wd += sd * g;
                        }
                        (wu, wd)
                    })
                    .collect()
            })
            .collect();

        let mut b_vector = vec![0.0; n];
        let mut b_divergence = vec![0.0; n];
        for (i, b) in space.basis.iter().enumerate() {
            let mut bv = 0.0;
            let mut bd = 0.0;
            for side in 0..2 {
                let t = b.triangles[side];
                let (c, p) = b.affine(side);
                for ((x, w), (wu, wd)) in rhs_rule.points[t]
                    .iter()
                    .zip(&rhs_rule.weights[t])
                    .zip(&potentials[t])
                {
                    bv += w * c * ((x[0] - p[0]) * wu[0] + (x[1] - p[1]) * wu[1]);
                    bd += w * 2.0 * c * wd;
                }
            }
            b_vector[i] = bv * inv_h2;
            b_divergence[i] = bd * inv_h2;
        }

        Ok(EfieParts {
            space,
            h,
            quad_degree,
            a_vector,
            a_divergence,
            b_vector,
            b_divergence,
        })
    }

    /// `A = α A_vec + β A_div`, `b = α b_vec + β b_div`.
    pub fn system(&self, alpha: f64, beta: f64) -> EfieSystem {
        let n = self.space.len();
        let a = DenseMatrix::from_fn(n, n, |i, j| {
            alpha * self.a_vector[(i, j)] + beta * self.a_divergence[(i, j)]
        });
        let b = self
            .b_vector
            .iter()
            .zip(&self.b_divergence)
            .map(|(v, d)| alpha * v + beta * d)
            .collect();
        EfieSystem {
            a,
            b,
            space: self.space.clone(),
            h: self.h,
            alpha,
            beta,
        }
    }
}

/// Assembles `A_ij = a(φ_j, φ_i)/h²` and `b_i = a(u, φ_i)/h²`.
pub fn assemble_efie(
    mf: &ManufacturedEfie,
    mesh: &TriangleMesh,
    quad_degree: usize,
) -> Result<EfieSystem> {
    Ok(EfieParts::assemble(mf, mesh, quad_degree)?.system(mf.alpha, mf.beta))
}

/// Edge-midpoint normal traces `u(m_j) · n̂_j`.
pub fn nominal_coefficients_efie(mf: &ManufacturedEfie, space: &RwgSpace) -> Vec<f64> {
    space
        .basis
        .iter()
        .map(|b| {
            let u = mf.eval(b.midpoint);
            u[0] * b.normal[0] + u[1] * b.normal[1]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pivoted_qr;
    use crate::mesh::build_mesh;

    fn constant_field(v: Point) -> ManufacturedEfie {
        ManufacturedEfie {
            label: "constant".into(),
            u: Arc::new(move |_| v),
            div_u: Arc::new(|_| 0.0),
            alpha: 1.0,
            beta: 0.0,
            kernel: Kernel::Paraboloid { scale: 5.0 },
        }
    }

    #[test]
    fn zero_solution_gives_zero_rhs() {
        let mut mf = constant_field([0.0, 0.0]);
        mf.label = "zero".into();
        let sys = assemble_efie(&mf, &build_mesh(2).unwrap(), DEFAULT_QUAD_DEGREE).unwrap();
        assert!(sys.b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_low_quadrature_degree() {
        let mf = ManufacturedEfie::standard(1.0, 1.0);
        assert!(assemble_efie(&mf, &build_mesh(2).unwrap(), 4).is_err());
    }

    #[test]
    fn standard_solution_has_no_boundary_flux() {
        let mf = ManufacturedEfie::standard(1.0, 1.0);
        assert!(mf.max_boundary_normal_trace(200) <= 1e-12);
    }

    #[test]
    fn boundary_edges_would_get_zero_nominal_flux() {
        let mf = ManufacturedEfie::standard(1.0, 1.0);
        let mesh = build_mesh(4).unwrap();
        for (e, edge) in mesh.edges.iter().enumerate() {
            if edge.is_interior() {
                continue;
            }
            let [x, y] = mesh.edge_midpoint(e);
            let n = if x.abs() == 1.0 {
                [x, 0.0]
            } else {
                [0.0, if y == 0.0 { -1.0 } else { 1.0 }]
            };
            let u = mf.eval([x, y]);
            assert!((u[0] * n[0] + u[1] * n[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_field_nominal_coefficients() {
        let mf = constant_field([1.0, 0.0]);
        let mesh = build_mesh(3).unwrap();
        let space = RwgSpace::new(&mesh);
        let un = nominal_coefficients_efie(&mf, &space);
        for (b, c) in space.basis.iter().zip(&un) {
            let [p, q] = mesh.edges[b.edge].vertices;
            let (p, q) = (mesh.vertices[p], mesh.vertices[q]);
            if p[0] == q[0] {
                assert!((c - 1.0).abs() < 1e-15, "vertical edge");
            } else if p[1] == q[1] {
                assert!(c.abs() < 1e-15, "horizontal edge");
            }
        }
    }

    #[test]
    fn matrix_is_symmetric() {
        let mf = ManufacturedEfie::standard(1.0, 1.0);
        let sys = assemble_efie(&mf, &build_mesh(3).unwrap(), DEFAULT_QUAD_DEGREE).unwrap();
        let diff = sys.a.max_abs_diff(&sys.a.transpose());
        assert!(diff <= 1e-10 * sys.a.max_abs());
        sys.a.check_finite().unwrap();
    }

    #[test]
    fn matrix_quadrature_is_converged() {
        let mf = ManufacturedEfie::standard(1.0, 1.0);
        let mesh = build_mesh(2).unwrap();
        let lo = assemble_efie(&mf, &mesh, DEFAULT_QUAD_DEGREE).unwrap();
        let hi = assemble_efie(&mf, &mesh, DEFAULT_QUAD_DEGREE + 4).unwrap();
        assert!(lo.a.max_abs_diff(&hi.a) < 1e-9);
    }

    #[test]
    fn parts_combine_linearly() {
        let mesh = build_mesh(2).unwrap();
        let both = assemble_efie(&ManufacturedEfie::standard(1.0, 1.0), &mesh, 6).unwrap();
        let parts = EfieParts::assemble(&ManufacturedEfie::standard(0.0, 0.0), &mesh, 6).unwrap();
        let sum = parts.system(1.0, 1.0);
        assert_eq!(sum.a, both.a);
        assert_eq!(sum.b, both.b);
    }

    #[test]
    fn kernel_rank_is_bounded() {
        let mesh = build_mesh(4).unwrap();
        let parts = EfieParts::assemble(&ManufacturedEfie::standard(1.0, 0.0), &mesh, 6).unwrap();
        let rank_vec = pivoted_qr(&parts.a_vector.transpose(), 1e-10).unwrap().rank;
        let rank_div = pivoted_qr(&parts.a_divergence.transpose(), 1e-10)
            .unwrap()
            .rank;
        assert!(rank_vec <= 12, "vector part rank {rank_vec}");
        assert!(rank_div <= 12, "divergence part rank {rank_div}");
        assert!(rank_vec >= 1 && rank_div >= 1);
    }

    #[test]
    fn custom_kernel_matches_builtin() {
        let mesh = build_mesh(2).unwrap();
        let mf = ManufacturedEfie::standard(1.0, 1.0);
        let mut custom = mf.clone();
        custom.kernel = Kernel::Custom(Arc::new(|x, y| paraboloid(5.0, x, y)));
        let a = assemble_efie(&mf, &mesh, 6).unwrap();
        let b = assemble_efie(&custom, &mesh, 6).unwrap();
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
    }
}
