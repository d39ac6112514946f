//! One-dimensional Galerkin analogy with kernel `G = 1`.
//!
//! With piecewise-linear hat functions on a uniform mesh of `[a, b]`, the
//! `α` term of the bilinear form collapses to an all-ones matrix and a constant
//! right-hand side. The `β` term vanishes: each hat derivative integrates to
//! zero. Rows are divided by `α h` ([`Scaling::ByAlphaH`]) for
//! truncation-error work and by `α h²` ([`Scaling::ByAlphaH2`]) for the
//! minimal-change solve.
//!
//! All indices are zero-based: unknown `k` is the hat centred at `a + (k + 1) h`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::quadrature::unit_interval_rule;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exactness degree of the per-element Gauss–Legendre rule for right-hand sides.
pub const RHS_QUADRATURE_DEGREE: usize = 20;

/// A manufactured solution on `[a, b]` with homogeneous boundary values.
#[derive(Clone)]
pub struct Manufactured1d {
    name: String,
    u: ScalarFn,
    du: ScalarFn,
    taylor_order: Option<u32>,
    domain: (f64, f64),
}

impl fmt::Debug for Manufactured1d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Manufactured1d")
            .field("name", &self.name)
            .field("taylor_order", &self.taylor_order)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Manufactured1d {
    /// `taylor_order` is the power `q` of the leading Taylor term of `u` about
    /// `a`; `None` for the zero solution.
    pub fn new(
        name: impl Into<String>,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64) -> f64 + Send + Sync + 'static,
        taylor_order: Option<u32>,
        domain: (f64, f64),
    ) -> Result<Self> {
        let (a, b) = domain;
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(Error::InvalidArgument(format!("bad domain [{a}, {b}]")));
        }
        if let Some(0) = taylor_order {
            return Err(Error::InvalidArgument(
                "taylor order must be positive".into(),
            ));
        }
        let (ua, ub) = (u(a), u(b));
        if ua.abs() > 1e-14 || ub.abs() > 1e-14 {
            return Err(Error::InvalidArgument(format!(
                "manufactured solution must vanish at both ends (u(a) = {ua:e}, u(b) = {ub:e})"
            )));
        }
        Ok(Manufactured1d {
            name: name.into(),
            u: Arc::new(u),
            du: Arc::new(du),
            taylor_order,
            domain,
        })
    }

    /// `u = sin πx` on `[0, 1]`, `q = 1`.
    pub fn sin_pi_x() -> Self {
        use std::f64::consts::PI;
        Self::new(
            "sin(pi x)",
            |x| (PI * x).sin(),
            |x| PI * (PI * x).cos(),
            Some(1),
            (0.0, 1.0),
        )
        .expect("valid manufactured solution")
    }

    /// `u = sin πx²` on `[0, 1]`, `q = 2`.
    pub fn sin_pi_x_squared() -> Self {
        use std::f64::consts::PI;
        Self::new(
            "sin(pi x^2)",
            |x| (PI * x * x).sin(),
            |x| 2.0 * PI * x * (PI * x * x).cos(),
            Some(2),
            (0.0, 1.0),
        )
        .expect("valid manufactured solution")
    }

    pub fn zero() -> Self {
        Self::new("0", |_| 0.0, |_| 0.0, None, (0.0, 1.0)).expect("valid manufactured solution")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.u)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.du)(x)
    }

    pub fn taylor_order(&self) -> Option<u32> {
        self.taylor_order
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn length(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    /// `u(a + h) / h^q`, which tends to a nonzero constant as `h → 0`.
    pub fn taylor_ratio(&self, h: f64) -> Option<f64> {
        self.taylor_order
            .map(|q| self.eval(self.domain.0 + h) / h.powi(q as i32))
    }
}

/// Which power of `h` the rows were divided by (beyond the constant `α`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scaling {
    /// `A = h·1`, `b = ∫u`; used for the truncation error.
    ByAlphaH,
    /// `A = 1`, `b = (1/h)∫u`; used for the minimal-change solve.
    ByAlphaH2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct System1d {
    /// Number of unknowns, `N − 1`.
    pub n: usize,
    /// Number of elements `N`.
    pub elements: usize,
    pub h: f64,
    pub domain: (f64, f64),
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub scaling: Scaling,
}

fn check_elements(elements: usize) -> Result<()> {
    if elements < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 elements, got {elements}"
        )));
    }
    Ok(())
}

/// Composite Gauss–Legendre integral of `f` over `elements` equal cells of `[a, b]`.
fn composite_integral(f: impl Fn(f64) -> f64, domain: (f64, f64), elements: usize) -> f64 {
    let (x, w) = unit_interval_rule(RHS_QUADRATURE_DEGREE);
    let h = (domain.1 - domain.0) / elements as f64;
    let mut total = 0.0;
    for e in 0..elements {
        let x0 = domain.0 + e as f64 * h;
        let cell: f64 = x.iter().zip(&w).map(|(t, wt)| wt * f(x0 + t * h)).sum();
        total += cell * h;
    }
    total
}

/// Assembles the all-ones system for `N = elements` uniform cells.
pub fn assemble_1d(mf: &Manufactured1d, elements: usize, scaling: Scaling) -> Result<System1d> {
    check_elements(elements)?;
    let n = elements - 1;
    let h = mf.length() / elements as f64;
    let integral = composite_integral(|x| mf.eval(x), mf.domain, elements);
    let (entry, rhs) = match scaling {
        Scaling::ByAlphaH => (h, integral),
        Scaling::ByAlphaH2 => (1.0, integral / h),
    };
    Ok(System1d {
        n,
        elements,
        h,
        domain: mf.domain,
        a: DenseMatrix::filled(n, n, entry),
        b: vec![rhs; n],
        scaling,
    })
}

/// Largest row of the `β` term `∫ φ_i' dx · ∫ u' dx'`, assembled by quadrature.
pub fn beta_term_residual(mf: &Manufactured1d, elements: usize) -> Result<f64> {
    check_elements(elements)?;
    let h = mf.length() / elements as f64;
    let inner = composite_integral(|x| mf.derivative(x), mf.domain, elements);
    let (_, w) = unit_interval_rule(RHS_QUADRATURE_DEGREE);
    let cell_weight: f64 = w.iter().sum::<f64>() * h;
    let mut worst: f64 = 0.0;
    for _ in 0..elements - 1 {
        // Hat slope is +1/h on the left cell and −1/h on the right cell.
        let outer = cell_weight * (1.0 / h) + cell_weight * (-1.0 / h);
        worst = worst.max((outer * inner).abs());
    }
    Ok(worst)
}

/// Nodal interpolation values `u(a + (k + 1) h)`, `k = 0..N−1`.
pub fn nominal_coefficients_1d(mf: &Manufactured1d, elements: usize) -> Result<Vec<f64>> {
    check_elements(elements)?;
    let (a, _) = mf.domain;
    let h = mf.length() / elements as f64;
    Ok((1..elements).map(|k| mf.eval(a + k as f64 * h)).collect())
}

/// Explicit factorization `Aᵀ = Q₁ R₁` of the reduced all-ones matrix with
/// one entry `(i, j)` scaled by `1 + δ` (no column pivoting).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormFactorization {
    pub n: usize,
    pub row: usize,
    pub col: usize,
    pub delta: f64,
    /// `n − 1`
    pub xi: f64,
    /// `1 + δ`
    pub eta: f64,
    /// `n + δ`
    pub zeta: f64,
    /// `sqrt(ξ + η²)`
    pub gamma: f64,
    /// `n × 2`
    pub q1: DenseMatrix,
    /// `2 × n`
    pub r1: DenseMatrix,
    /// `(R₁ᵀ)†`, `2 × n`
    pub r1_pinv: DenseMatrix,
}

/// Closed-form `Q₁`, `R₁`, `(R₁ᵀ)†` for the injected reduced matrix.
///
/// `row` and `col` are zero-based; `row == 0` selects the first-row branch.
pub fn closed_form_with_error(
    n: usize,
    delta: f64,
    row: usize,
    col: usize,
) -> Result<ClosedFormFactorization> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need n >= 3, got {n}")));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidArgument(
            "delta must be finite and nonzero".into(),
        ));
    }
    if row >= n || col >= n {
        return Err(Error::InjectionOutOfBounds { row, col, n });
    }
    let nf = n as f64;
    let xi = nf - 1.0;
    let eta = 1.0 + delta;
    let zeta = nf + delta;
    let gamma = (xi + eta * eta).sqrt();
    let sx = xi.sqrt();

    let (q1, r1, r1_pinv) = if row == 0 {
        let q1 = DenseMatrix::from_fn(n, 2, |k, c| {
            let v = match (c, k == col) {
                (0, false) => 1.0,
                (0, true) => eta,
                (_, false) => eta / sx,
                (_, true) => -sx,
            };
            v / gamma
        });
        let r1 = DenseMatrix::from_fn(2, n, |r, k| {
            let v = match (r, k) {
                (0, 0) => gamma * gamma,
                (0, _) => zeta,
                (_, 0) => 0.0,
                _ => delta * sx,
            };
            v / gamma
        });
        let r1_pinv = DenseMatrix::from_fn(2, n, |r, k| {
            let v = match (r, k) {
                (0, 0) => delta,
                (0, _) => 0.0,
                (_, 0) => -zeta / sx,
                _ => gamma * gamma / (xi * sx),
            };
            v / (delta * gamma)
        });
        (q1, r1, r1_pinv)
    } else {
        let s = nf.sqrt();
        let q1 = DenseMatrix::from_fn(n, 2, |k, c| {
            let v = match (c, k == col) {
                (0, _) => 1.0,
                (_, false) => -1.0 / sx,
                (_, true) => sx,
            };
            v / s
        });
        let r1 = DenseMatrix::from_fn(2, n, |r, k| {
            let v = match (r, k == row) {
                (0, false) => nf,
                (0, true) => zeta,
                (_, false) => 0.0,
                (_, true) => delta * sx,
            };
            v / s
        });
        let scale = 1.0 / (s * xi * sx * delta);
        let r1_pinv = DenseMatrix::from_fn(2, n, |r, k| {
            let v = match (r, k == row) {
                (0, false) => delta * sx,
                (0, true) => 0.0,
                (_, false) => -zeta,
                (_, true) => nf * xi,
            };
            v * scale
        });
        (q1, r1, r1_pinv)
    };

    Ok(ClosedFormFactorization {
        n,
        row,
        col,
        delta,
        xi,
        eta,
        zeta,
        gamma,
        q1,
        r1,
        r1_pinv,
    })
}

impl ClosedFormFactorization {
    /// The injected reduced matrix: all ones with entry `(row, col)` equal to `1 + δ`.
    pub fn injected_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |r, c| {
            if (r, c) == (self.row, self.col) {
                self.eta
            } else {
                1.0
            }
        })
    }

    /// `u_h = Q₁ u' − Q₁ Q₁ᵀ u_n + u_n` with `u' = (R₁ᵀ)† b`.
    pub fn minimal_change(&self, b: &[f64], u_nominal: &[f64]) -> Vec<f64> {
        let u_prime = self.r1_pinv.matvec(b);
        let proj: Vec<f64> = (0..2).map(|c| dot(&self.q1.column(c), u_nominal)).collect();
        (0..self.n)
            .map(|k| {
                u_nominal[k]
                    + self.q1[(k, 0)] * (u_prime[0] - proj[0])
                    + self.q1[(k, 1)] * (u_prime[1] - proj[1])
            })
            .collect()
    }
}

/// Leading-order discretization error for an injection in column `col`:
/// `u_n[col] · (−e_col + (h / (b − a)) · (1 − e_col))`. Independent of `δ`.
pub fn eh_tilde_prediction(u_n: &[f64], col: usize, h: f64, domain_length: f64) -> Vec<f64> {
    assert!(col < u_n.len(), "column index out of range");
    let uj = u_n[col];
    let off = uj * h / domain_length;
    (0..u_n.len())
        .map(|k| if k == col { -uj } else { off })
        .collect()
}

/// Leading-order truncation-error change `δ u_n[col] h e_row` for an
/// injection at `(row, col)` of the `α h`-scaled system.
pub fn tau_tilde_prediction(u_n: &[f64], row: usize, col: usize, delta: f64, h: f64) -> Vec<f64> {
    assert!(row < u_n.len() && col < u_n.len(), "index out of range");
    let mut out = vec![0.0; u_n.len()];
    out[row] = delta * u_n[col] * h;
    out
}
