//! Triangle meshes of the rectangle `[-1, 1] × [0, 1]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Vertex indices, smaller first.
    pub vertices: [usize; 2],
    /// One or two incident triangles, ascending.
    pub triangles: Vec<usize>,
}

impl Edge {
    pub fn is_interior(&self) -> bool {
        self.triangles.len() == 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Sorted by midpoint `(y, x)`.
    pub edges: Vec<Edge>,
    /// Refinement parameter for structured meshes.
    pub refinement: Option<usize>,
    /// `2 / sqrt(N)` with `N` the triangle count.
    pub h: f64,
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

impl TriangleMesh {
    /// Builds a mesh from vertices and triangles, orienting triangles
    /// counter-clockwise and deriving the edge list.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh has no triangles".into()));
        }
        let mut tris = Vec::with_capacity(triangles.len());
        for (t, &[a, b, c]) in triangles.iter().enumerate() {
            if a.max(b).max(c) >= vertices.len() {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let area = signed_area(vertices[a], vertices[b], vertices[c]);
            if area == 0.0 || !area.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} is degenerate"
                )));
            }
            tris.push(if area > 0.0 { [a, b, c] } else { [a, c, b] });
        }

        let mut incidence: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let (p, q) = (tri[k], tri[(k + 1) % 3]);
                incidence.entry([p.min(q), p.max(q)]).or_default().push(t);
            }
        }
        let mut edges = Vec::with_capacity(incidence.len());
        for (vertices_of_edge, triangles_of_edge) in incidence {
            if triangles_of_edge.len() > 2 {
                return Err(Error::InvalidArgument(format!(
                    "edge {vertices_of_edge:?} is shared by more than two triangles"
                )));
            }
            edges.push(Edge {
                vertices: vertices_of_edge,
                triangles: triangles_of_edge,
            });
        }
        let mid = |e: &Edge| {
            let (p, q) = (vertices[e.vertices[0]], vertices[e.vertices[1]]);
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
        };
        edges.sort_by(|a, b| {
            let (ma, mb) = (mid(a), mid(b));
            ma[1]
                .total_cmp(&mb[1])
                .then(ma[0].total_cmp(&mb[0]))
                .then(a.vertices.cmp(&b.vertices))
        });

        let h = 2.0 / (tris.len() as f64).sqrt();
        Ok(TriangleMesh {
            vertices,
            triangles: tris,
            edges,
            refinement: None,
            h,
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [p, q] = self.edges[e].vertices;
        let (p, q) = (self.vertices[p], self.vertices[q]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_interior()).count()
    }

    pub fn interior_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_interior()).count()
    }

    /// `V − E + F` counting the outer face; 2 for a simply connected mesh.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64 + 1
    }

    /// Index of a triangle containing `x` (boundary inclusive), lowest index first.
    pub fn locate(&self, x: Point) -> Option<usize> {
        (0..self.triangles.len()).find(|&t| contains(&self.corners(t), x))
    }

    /// Plain-text dump: vertex, triangle and edge sections, one record per line.
    ///
    /// ```text
    /// vertices <V>
    /// <x> <y>
    /// triangles <N>
    /// <v0> <v1> <v2>
    /// edges <E>
    /// <v0> <v1> <t0> <t1 | ->
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e}", v[0], v[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "edges {}", self.edges.len());
        for e in &self.edges {
            let second = e
                .triangles
                .get(1)
                .map_or_else(|| "-".to_string(), |t| t.to_string());
            let _ = writeln!(
                s,
                "{} {} {} {}",
                e.vertices[0], e.vertices[1], e.triangles[0], second
            );
        }
        s
    }
}

pub(crate) fn contains(tri: &[Point; 3], x: Point) -> bool {
    let area = signed_area(tri[0], tri[1], tri[2]);
    let tol = -1e-12 * area.abs();
    let l0 = signed_area(x, tri[1], tri[2]);
    let l1 = signed_area(tri[0], x, tri[2]);
    let l2 = signed_area(tri[0], tri[1], x);
    l0 >= tol && l1 >= tol && l2 >= tol
}

/// Structured mesh of `[-1, 1] × [0, 1]`: `2m × m` squares of side `1/m`,
/// each split along its lower-left to upper-right diagonal.
///
/// Vertices are numbered lexicographically by `(y, x)`; triangles by square
/// (row-major from the lower-left) with the lower triangle first.
pub fn build_mesh(m: usize) -> Result<TriangleMesh> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "refinement must be at least 2, got {m}"
        )));
    }
    let nx = 2 * m;
    let ny = m;
    let step = 1.0 / m as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for k in 0..=ny {
        for i in 0..=nx {
            vertices.push([-1.0 + i as f64 * step, k as f64 * step]);
        }
    }
    let id = |i: usize, k: usize| k * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for k in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (id(i, k), id(i + 1, k), id(i + 1, k + 1), id(i, k + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut mesh = TriangleMesh::from_parts(vertices, triangles)?;
    mesh.refinement = Some(m);
    Ok(mesh)
}
