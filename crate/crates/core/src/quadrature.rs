//! Gauss–Legendre rules on intervals and conical-product rules on triangles.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[0, 1]`, exact for polynomials of the given degree.
pub fn unit_interval_rule(degree: usize) -> (Vec<f64>, Vec<f64>) {
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|v| 0.5 * v).collect(),
    )
}

/// Quadrature rule on the reference triangle `{ξ ≥ 0, η ≥ 0, ξ + η ≤ 1}`.
///
/// Built as a Gauss–Legendre product on the unit square collapsed onto the
/// triangle (`ξ = s`, `η = (1 − s) t`), which integrates every polynomial of
/// total degree `≤ degree` exactly. Weights sum to the reference area `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub degree: usize,
    /// Barycentric-free reference coordinates `(ξ, η)`.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn new(degree: usize) -> Self {
        // The collapse adds a factor (1 − s), so the s-direction sees degree + 1.
        let k = (degree + 2).div_ceil(2);
        let (x, w) = gauss_legendre(k);
        let mut points = Vec::with_capacity(k * k);
        let mut weights = Vec::with_capacity(k * k);
        for (xs, ws) in x.iter().zip(&w) {
            let s = 0.5 * (xs + 1.0);
            for (xt, wt) in x.iter().zip(&w) {
                let t = 0.5 * (xt + 1.0);
                points.push([s, (1.0 - s) * t]);
                weights.push(0.25 * ws * wt * (1.0 - s));
            }
        }
        TriangleRule {
            degree,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical points and weights on the triangle `(v0, v1, v2)`.
    pub fn map(&self, v: &[[f64; 2]; 3]) -> (Vec<[f64; 2]>, Vec<f64>) {
        let e1 = [v[1][0] - v[0][0], v[1][1] - v[0][1]];
        let e2 = [v[2][0] - v[0][0], v[2][1] - v[0][1]];
        let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        let pts = self
            .points
            .iter()
            .map(|[s, t]| {
                [
                    v[0][0] + s * e1[0] + t * e2[0],
                    v[0][1] + s * e1[1] + t * e2[1],
                ]
            })
            .collect();
        let wts = self.weights.iter().map(|w| w * jac).collect();
        (pts, wts)
    }
}
