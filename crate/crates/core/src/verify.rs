//! Truncation- and discretization-error metrics, refinement sweeps, observed
//! orders and detection verdicts.
//!
//! The truncation error inserts the nominal coefficients into the (possibly
//! injected) discrete equations, `τ = A uⁿ − b`. The discretization error is
//! `eʰ = uʰ − uⁿ` with `uʰ` the minimal-change solution.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::efie::{nominal_coefficients_efie, EfieParts, ManufacturedEfie};
use crate::error::{Error, Result};
use crate::injection::{self, InjectionSpec, LevelContext, Locator, ResolvedInjection};
use crate::linalg::{
    minimal_change_solve, norm_inf, DenseMatrix, MinimalChangeSolution, DEFAULT_RANK_TOLERANCE,
};
use crate::mesh::build_mesh;
use crate::model1d::{
    assemble_1d, eh_tilde_prediction, nominal_coefficients_1d, tau_tilde_prediction,
    Manufactured1d, Scaling,
};

/// Order expected from every metric when no error is planted.
pub const CLEAN_ORDER: f64 = 2.0;
pub const DEFAULT_MARGIN: f64 = 0.3;
/// Errors below this fraction of the largest error in a sweep are round-off.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

pub const DEFAULT_LEVELS_1D: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];
pub const DEFAULT_LEVELS_EFIE: [usize; 4] = [2, 4, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `‖τ‖_∞`
    Truncation,
    /// `‖eʰ‖_∞`
    Discretization,
    /// `‖τ̃ − τ‖_∞` (1D only)
    TruncationDeviation,
    /// `‖ẽʰ − eʰ‖_∞` (1D only)
    DiscretizationDeviation,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Truncation,
        Metric::Discretization,
        Metric::TruncationDeviation,
        Metric::DiscretizationDeviation,
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            Metric::Truncation => "tau",
            Metric::Discretization => "eh",
            Metric::TruncationDeviation => "tau_dev",
            Metric::DiscretizationDeviation => "eh_dev",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Truncation => "truncation",
            Metric::Discretization => "discretization",
            Metric::TruncationDeviation => "truncation deviation",
            Metric::DiscretizationDeviation => "discretization deviation",
        })
    }
}

/// `A uⁿ − b`.
pub fn truncation_error(a: &DenseMatrix, b: &[f64], u_n: &[f64]) -> Vec<f64> {
    a.matvec(u_n).iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `uʰ − uⁿ` with `uʰ` the minimal-change solution; also returns the solve.
pub fn discretization_error(
    a: &DenseMatrix,
    b: &[f64],
    u_n: &[f64],
    rank_tolerance: f64,
) -> Result<(Vec<f64>, MinimalChangeSolution)> {
    let sol = minimal_change_solve(a, b, u_n, rank_tolerance)?;
    let e = sol.u_h.iter().zip(u_n).map(|(x, y)| x - y).collect();
    Ok((e, sol))
}

/// Observed orders of a metric across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OrderEstimate {
    /// `slopes[k]` is the order between levels `k` and `k + 1`; `headline` is the last.
    Slopes { slopes: Vec<f64>, headline: f64 },
    /// Some error sits at round-off relative to the sweep: the metric is clean.
    RoundoffFloor,
}

impl OrderEstimate {
    pub fn headline(&self) -> Option<f64> {
        match self {
            OrderEstimate::Slopes { headline, .. } => Some(*headline),
            OrderEstimate::RoundoffFloor => None,
        }
    }
}

impl fmt::Display for OrderEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderEstimate::Slopes { headline, .. } => write!(f, "{headline:.3}"),
            OrderEstimate::RoundoffFloor => f.write_str("clean/inf"),
        }
    }
}

/// `p_k = log(ε_k / ε_{k+1}) / log(h_k / h_{k+1})`.
pub fn observed_order(eps: &[f64], h: &[f64]) -> Result<OrderEstimate> {
    if eps.len() != h.len() || eps.len() < 2 {
        return Err(Error::Dimension(format!(
            "need matching error and mesh-size lists of length >= 2, got {} and {}",
            eps.len(),
            h.len()
        )));
    }
    let max = eps.iter().cloned().fold(0.0, f64::max);
    if eps.iter().any(|&e| e.is_nan() || e <= ROUNDOFF_FLOOR * max) {
        return Ok(OrderEstimate::RoundoffFloor);
    }
    let slopes: Vec<f64> = eps
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    let headline = *slopes.last().expect("at least one pair");
    Ok(OrderEstimate::Slopes { slopes, headline })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub metric: Metric,
    pub expected_order_clean: f64,
    /// `None` when the metric sits at the round-off floor.
    pub observed_order: Option<f64>,
    pub detected: bool,
    pub margin: f64,
}

impl DetectionVerdict {
    /// Detected when the observed order falls below `2 − margin`.
    pub fn new(metric: Metric, estimate: &OrderEstimate, margin: f64) -> Self {
        let observed_order = estimate.headline();
        DetectionVerdict {
            metric,
            expected_order_clean: CLEAN_ORDER,
            observed_order,
            detected: observed_order.is_some_and(|p| p < CLEAN_ORDER - margin),
            margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    OneD,
    Efie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Clean,
    Fixed,
    Spatial,
}

/// Parameters that determine the predicted orders of a case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseParameters {
    pub kind: ProblemKind,
    /// Power of the leading Taylor term of the solution at the boundary.
    pub q: u32,
    /// Rate of the injected error, `δ = O(hʳ)`.
    pub r: f64,
    pub column: ColumnKind,
}

impl CaseParameters {
    pub fn new(kind: ProblemKind, q: u32, spec: &InjectionSpec) -> Self {
        let column = match spec.column_locator() {
            None => ColumnKind::Clean,
            Some(Locator::Index(_)) => ColumnKind::Fixed,
            Some(Locator::Spatial(_)) => ColumnKind::Spatial,
        };
        CaseParameters {
            kind,
            q,
            r: spec.rate,
            column,
        }
    }
}

/// Predicted order of a metric.
///
/// In 1D the planted term of `τ` is `δ uⁿ_j h`; for the EFIE it is
/// `δ uⁿ_j a(φ_j, φ_i)/h²` with `a(φ_j, φ_i) = O(h⁴)`, one extra power of `h`.
/// The leading discretization error `−uⁿ_j e_j` does not involve `δ`.
pub fn predicted_order(params: &CaseParameters, metric: Metric) -> f64 {
    let q = params.q as f64;
    let r = params.r;
    let extra = match params.kind {
        ProblemKind::OneD => 1.0,
        ProblemKind::Efie => 2.0,
    };
    match (metric, params.column) {
        (_, ColumnKind::Clean) => CLEAN_ORDER,
        (Metric::Truncation, ColumnKind::Fixed) => (q + r + extra).min(2.0),
        (Metric::Truncation, ColumnKind::Spatial) => (r + extra).min(2.0),
        (Metric::Discretization, ColumnKind::Fixed) => q.min(2.0),
        (Metric::Discretization, ColumnKind::Spatial) => 0.0,
        (Metric::TruncationDeviation | Metric::DiscretizationDeviation, _) => CLEAN_ORDER,
    }
}

/// Per-level norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    /// `N` elements in 1D, `m` for the EFIE mesh.
    pub refinement: usize,
    pub h: f64,
    pub n: usize,
    pub tau_inf: f64,
    pub eh_inf: f64,
    pub tau_dev_inf: Option<f64>,
    pub eh_dev_inf: Option<f64>,
    pub rank: usize,
    pub residual: f64,
    pub injection: Option<ResolvedInjection>,
}

impl LevelResult {
    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Truncation => Some(self.tau_inf),
            Metric::Discretization => Some(self.eh_inf),
            Metric::TruncationDeviation => self.tau_dev_inf,
            Metric::DiscretizationDeviation => self.eh_dev_inf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricOrder {
    pub metric: Metric,
    pub estimate: OrderEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub injection: String,
    /// Ordered by decreasing `h`.
    pub levels: Vec<LevelResult>,
    pub orders: Vec<MetricOrder>,
    pub verdicts: Vec<DetectionVerdict>,
}

impl ConvergenceReport {
    pub fn order(&self, metric: Metric) -> Option<&OrderEstimate> {
        self.orders
            .iter()
            .find(|o| o.metric == metric)
            .map(|o| &o.estimate)
    }

    /// Headline order, with the round-off floor reported as `+∞`.
    pub fn headline(&self, metric: Metric) -> Option<f64> {
        self.order(metric)
            .map(|e| e.headline().unwrap_or(f64::INFINITY))
    }

    pub fn verdict(&self, metric: Metric) -> Option<&DetectionVerdict> {
        self.verdicts.iter().find(|v| v.metric == metric)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per level: `h,n,tau_inf,eh_inf,tau_dev_inf,eh_dev_inf,rank`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,n,tau_inf,eh_inf,tau_dev_inf,eh_dev_inf,rank\n");
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        for l in &self.levels {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                l.h,
                l.n,
                l.tau_inf,
                l.eh_inf,
                opt(l.tau_dev_inf),
                opt(l.eh_dev_inf),
                l.rank
            ));
        }
        s
    }
}

/// A problem family to sweep.
#[derive(Debug, Clone)]
pub enum Problem {
    OneD(Manufactured1d),
    Efie {
        manufactured: ManufacturedEfie,
        quad_degree: usize,
    },
}

impl Problem {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::OneD(_) => ProblemKind::OneD,
            Problem::Efie { .. } => ProblemKind::Efie,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Problem::OneD(mf) => format!("1d u = {}", mf.name()),
            Problem::Efie {
                manufactured,
                quad_degree,
            } => format!(
                "efie {} alpha = {} beta = {} quad = {}",
                manufactured.label, manufactured.alpha, manufactured.beta, quad_degree
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub rank_tolerance: f64,
    pub margin: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// EFIE assemblies keyed by `(solution label, kernel, m, quadrature degree)`.
/// The `α`/`β` split lets cases that differ only in those constants share work.
#[derive(Debug, Default)]
pub struct AssemblyCache {
    parts: Mutex<HashMap<(String, usize, usize), Arc<EfieParts>>>,
}

impl AssemblyCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn efie_parts(
        &self,
        mf: &ManufacturedEfie,
        m: usize,
        quad_degree: usize,
    ) -> Result<Arc<EfieParts>> {
        let key = (format!("{}|{:?}", mf.label, mf.kernel), m, quad_degree);
        if let Some(p) = self.parts.lock().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        let mesh = build_mesh(m)?;
        let parts = Arc::new(EfieParts::assemble(mf, &mesh, quad_degree)?);
        self.parts
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| parts.clone());
        Ok(parts)
    }
}

fn diff_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn apply_opt(a: &DenseMatrix, inj: &Option<ResolvedInjection>) -> Result<DenseMatrix> {
    match inj {
        Some(i) => injection::apply(a, i),
        None => Ok(a.clone()),
    }
}

fn run_level_1d(
    mf: &Manufactured1d,
    elements: usize,
    spec: &InjectionSpec,
    config: &StudyConfig,
) -> Result<LevelResult> {
    let trunc_sys = assemble_1d(mf, elements, Scaling::ByAlphaH)?;
    let solve_sys = assemble_1d(mf, elements, Scaling::ByAlphaH2)?;
    let u_n = nominal_coefficients_1d(mf, elements)?;
    let ctx = LevelContext::OneD {
        elements,
        domain: mf.domain(),
    };
    let inj = injection::resolve(spec, &ctx)?;
    let h = trunc_sys.h;

    let tau = truncation_error(&apply_opt(&trunc_sys.a, &inj)?, &trunc_sys.b, &u_n);
    let (eh, sol) = discretization_error(
        &apply_opt(&solve_sys.a, &inj)?,
        &solve_sys.b,
        &u_n,
        config.rank_tolerance,
    )?;

    let n = u_n.len();
    let (tau_tilde, eh_tilde) = match &inj {
        Some(i) => (
            tau_tilde_prediction(&u_n, i.row, i.col, i.delta, h),
            eh_tilde_prediction(&u_n, i.col, h, mf.length()),
        ),
        None => (vec![0.0; n], vec![0.0; n]),
    };

    Ok(LevelResult {
        refinement: elements,
        h,
        n,
        tau_inf: norm_inf(&tau),
        eh_inf: norm_inf(&eh),
        tau_dev_inf: Some(diff_inf(&tau_tilde, &tau)),
        eh_dev_inf: Some(diff_inf(&eh_tilde, &eh)),
        rank: sol.rank_used,
        residual: sol.residual_norm,
        injection: inj,
    })
}

fn run_level_efie(
    mf: &ManufacturedEfie,
    quad_degree: usize,
    m: usize,
    spec: &InjectionSpec,
    config: &StudyConfig,
    cache: &AssemblyCache,
) -> Result<LevelResult> {
    let parts = cache.efie_parts(mf, m, quad_degree)?;
    let sys = parts.system(mf.alpha, mf.beta);
    let u_n = nominal_coefficients_efie(mf, &sys.space);
    let inj = injection::resolve(spec, &LevelContext::Efie { space: &sys.space })?;
    let a = apply_opt(&sys.a, &inj)?;
    let tau = truncation_error(&a, &sys.b, &u_n);
    let (eh, sol) = discretization_error(&a, &sys.b, &u_n, config.rank_tolerance)?;
    Ok(LevelResult {
        refinement: m,
        h: sys.h,
        n: u_n.len(),
        tau_inf: norm_inf(&tau),
        eh_inf: norm_inf(&eh),
        tau_dev_inf: None,
        eh_dev_inf: None,
        rank: sol.rank_used,
        residual: sol.residual_norm,
        injection: inj,
    })
}

/// Runs a refinement sweep and estimates orders and verdicts.
pub fn run_study(
    problem: &Problem,
    levels: &[usize],
    spec: &InjectionSpec,
    config: &StudyConfig,
) -> Result<ConvergenceReport> {
    run_study_cached(problem, levels, spec, config, &AssemblyCache::new())
}

pub fn run_study_cached(
    problem: &Problem,
    levels: &[usize],
    spec: &InjectionSpec,
    config: &StudyConfig,
    cache: &AssemblyCache,
) -> Result<ConvergenceReport> {
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != levels.len() {
        return Err(Error::InvalidArgument(
            "refinement levels must be distinct".into(),
        ));
    }
    if sorted.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a study needs at least 3 refinement levels, got {}",
            sorted.len()
        )));
    }
    if config.margin.is_nan() || config.margin < 0.0 {
        return Err(Error::InvalidArgument("margin must be non-negative".into()));
    }

    let results: Vec<LevelResult> = sorted
        .par_iter()
        .map(|&level| {
            match problem {
                Problem::OneD(mf) => run_level_1d(mf, level, spec, config),
                Problem::Efie {
                    manufactured,
                    quad_degree,
                } => run_level_efie(manufactured, *quad_degree, level, spec, config, cache),
            }
            .map_err(|e| e.at_level(level))
        })
        .collect::<Result<_>>()?;

    let h: Vec<f64> = results.iter().map(|l| l.h).collect();
    let mut orders = Vec::new();
    for metric in Metric::ALL {
        let eps: Option<Vec<f64>> = results.iter().map(|l| l.metric(metric)).collect();
        if let Some(eps) = eps {
            orders.push(MetricOrder {
                metric,
                estimate: observed_order(&eps, &h)?,
            });
        }
    }
    let verdicts = orders
        .iter()
        .filter(|o| matches!(o.metric, Metric::Truncation | Metric::Discretization))
        .map(|o| DetectionVerdict::new(o.metric, &o.estimate, config.margin))
        .collect();

    Ok(ConvergenceReport {
        problem: problem.describe(),
        injection: format!("{} delta0 = {} r = {}", spec.site, spec.delta0, spec.rate),
        levels: results,
        orders,
        verdicts,
    })
}
