//! Rao–Wilton–Glisson basis functions on interior edges.
//!
//! Basis `j` lives on the two triangles sharing interior edge `j`. With `p±`
//! the vertices opposite the edge,
//!
//! ```text
//! φ_j(x) =  ℓ/(2A⁺) (x − p⁺)   on T⁺
//! φ_j(x) = −ℓ/(2A⁻) (x − p⁻)   on T⁻
//! ```
//!
//! so the normal component across the edge is exactly one. The plus triangle
//! is the lower-indexed one and `n̂_j` points from plus to minus.

use crate::mesh::{contains, Point, TriangleMesh};

#[derive(Debug, Clone, PartialEq)]
pub struct RwgBasis {
    /// Index into `mesh.edges`.
    pub edge: usize,
    /// `[plus, minus]` triangle indices.
    pub triangles: [usize; 2],
    /// Vertices opposite the edge in the plus and minus triangles.
    pub opposite: [Point; 2],
    pub areas: [f64; 2],
    pub length: f64,
    pub midpoint: Point,
    /// Unit normal from the plus triangle toward the minus triangle.
    pub normal: Point,
}

impl RwgBasis {
    /// `(c, p)` with `φ = c (x − p)` on side `s` (0 = plus, 1 = minus).
    pub fn affine(&self, side: usize) -> (f64, Point) {
        let sign = if side == 0 { 1.0 } else { -1.0 };
        (
            sign * self.length / (2.0 * self.areas[side]),
            self.opposite[side],
        )
    }

    /// Constant divergence on side `s`: `±ℓ/A±`.
    pub fn divergence(&self, side: usize) -> f64 {
        2.0 * self.affine(side).0
    }
}

#[derive(Debug, Clone)]
pub struct RwgSpace {
    pub mesh: TriangleMesh,
    pub basis: Vec<RwgBasis>,
    /// For each triangle, the `(basis, side)` pairs supported on it.
    pub by_triangle: Vec<Vec<(usize, usize)>>,
}

impl RwgSpace {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let mut basis = Vec::new();
        let mut by_triangle = vec![Vec::new(); mesh.triangle_count()];
        for (e, edge) in mesh.edges.iter().enumerate() {
            if !edge.is_interior() {
                continue;
            }
            let [va, vb] = edge.vertices;
            let (pa, pb) = (mesh.vertices[va], mesh.vertices[vb]);
            let tris = [edge.triangles[0], edge.triangles[1]];
            let opposite = tris.map(|t| {
                let v = mesh.triangles[t]
                    .into_iter()
                    .find(|&v| v != va && v != vb)
                    .expect("triangle has a vertex off the edge");
                mesh.vertices[v]
            });
            let tangent = [pb[0] - pa[0], pb[1] - pa[1]];
            let length = tangent[0].hypot(tangent[1]);
            let midpoint = mesh.edge_midpoint(e);
            let mut normal = [tangent[1] / length, -tangent[0] / length];
            // Opposite vertex of the minus triangle lies on the far side.
            let to_minus = [opposite[1][0] - midpoint[0], opposite[1][1] - midpoint[1]];
            if normal[0] * to_minus[0] + normal[1] * to_minus[1] < 0.0 {
                normal = [-normal[0], -normal[1]];
            }
            let j = basis.len();
            for (side, &t) in tris.iter().enumerate() {
                by_triangle[t].push((j, side));
            }
            basis.push(RwgBasis {
                edge: e,
                triangles: tris,
                opposite,
                areas: tris.map(|t| mesh.area(t)),
                length,
                midpoint,
                normal,
            });
        }
        RwgSpace {
            mesh: mesh.clone(),
            basis,
            by_triangle,
        }
    }

    /// Number of unknowns (interior edges).
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `φ_j(x)`; zero outside the two support triangles.
    pub fn eval(&self, j: usize, x: Point) -> Point {
        let b = &self.basis[j];
        for side in 0..2 {
            if contains(&self.mesh.corners(b.triangles[side]), x) {
                let (c, p) = b.affine(side);
                return [c * (x[0] - p[0]), c * (x[1] - p[1])];
            }
        }
        [0.0, 0.0]
    }

    /// `∇·φ_j` on triangle `t`; zero when `t` is not in the support.
    pub fn div(&self, j: usize, t: usize) -> f64 {
        let b = &self.basis[j];
        b.triangles
            .iter()
            .position(|&s| s == t)
            .map_or(0.0, |side| b.divergence(side))
    }

    /// `Σ_j c_j φ_j(x)`.
    pub fn eval_expansion(&self, coeffs: &[f64], x: Point) -> Point {
        assert_eq!(coeffs.len(), self.len());
        let Some(t) = self.mesh.locate(x) else {
            return [0.0, 0.0];
        };
        let mut out = [0.0, 0.0];
        for &(j, side) in &self.by_triangle[t] {
            let (c, p) = self.basis[j].affine(side);
            out[0] += coeffs[j] * c * (x[0] - p[0]);
            out[1] += coeffs[j] * c * (x[1] - p[1]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    #[test]
    fn unknown_count_matches_interior_edges() {
        let mesh = build_mesh(4).unwrap();
        let space = RwgSpace::new(&mesh);
        assert_eq!(space.len(), 84);
        assert!(space.basis.iter().all(|b| b.triangles[0] < b.triangles[1]));
    }

    #[test]
    fn zero_outside_support() {
        let space = RwgSpace::new(&build_mesh(2).unwrap());
        // Basis 0 sits at the lower-left corner; (0.9, 0.9) is far away.
        assert_eq!(space.eval(0, [0.9, 0.9]), [0.0, 0.0]);
    }

    #[test]
    fn unit_normal_flux_at_midpoint() {
        let space = RwgSpace::new(&build_mesh(3).unwrap());
        for (j, b) in space.basis.iter().enumerate() {
            for side in 0..2 {
                let (c, p) = b.affine(side);
                let m = b.midpoint;
                let phi = [c * (m[0] - p[0]), c * (m[1] - p[1])];
                let flux = phi[0] * b.normal[0] + phi[1] * b.normal[1];
                assert!((flux - 1.0).abs() < 1e-13, "basis {j} side {side}: {flux}");
            }
            let v = space.eval(j, b.midpoint);
            assert!((v[0] * b.normal[0] + v[1] * b.normal[1] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn normal_flux_vanishes_on_other_edges() {
        let mesh = build_mesh(2).unwrap();
        let space = RwgSpace::new(&mesh);
        for b in &space.basis {
            for side in 0..2 {
                let t = b.triangles[side];
                let corners = mesh.corners(t);
                let (c, p) = b.affine(side);
                for k in 0..3 {
                    let (u, v) = (corners[k], corners[(k + 1) % 3]);
                    let mid = [0.5 * (u[0] + v[0]), 0.5 * (u[1] + v[1])];
                    if (mid[0] - b.midpoint[0]).abs() < 1e-14
                        && (mid[1] - b.midpoint[1]).abs() < 1e-14
                    {
                        continue;
                    }
                    // Both endpoints of a non-defining edge include p, so φ is tangent there.
                    let tan = [v[0] - u[0], v[1] - u[1]];
                    let nrm = [tan[1], -tan[0]];
                    for x in [u, mid, v] {
                        let phi = [c * (x[0] - p[0]), c * (x[1] - p[1])];
                        assert!((phi[0] * nrm[0] + phi[1] * nrm[1]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn divergence_integrates_to_edge_length() {
        let mesh = build_mesh(2).unwrap();
        let space = RwgSpace::new(&mesh);
        for (j, b) in space.basis.iter().enumerate() {
            let plus = space.div(j, b.triangles[0]) * mesh.area(b.triangles[0]);
            let minus = space.div(j, b.triangles[1]) * mesh.area(b.triangles[1]);
            assert!((plus - b.length).abs() < 1e-14);
            assert!((minus + b.length).abs() < 1e-14);
        }
        let far = (0..mesh.triangle_count())
            .find(|t| !space.basis[0].triangles.contains(t))
            .unwrap();
        assert_eq!(space.div(0, far), 0.0);
    }
}
