//! Planted coding errors: one matrix entry scaled by `1 + δ`, `δ = δ₀ hʳ`.
//!
//! Rows and columns are picked either by a fixed index or by the unknown
//! nearest a spatial anchor. A fixed index drifts toward the boundary under
//! refinement; a spatial anchor stays put in physical space.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::mesh::Point;
use crate::rwg::RwgSpace;

/// Spatial anchor of a locator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Anchor {
    /// Column anchor of a fixed-row injection: `a + (b − a)/4` in 1D, `(0, ½)` for the EFIE.
    ColumnDefault,
    /// Domain centre: `(a + b)/2` in 1D, `(0, ½)` for the EFIE.
    Center,
    Point(Point),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Locator {
    /// Zero-based unknown index.
    Index(usize),
    Spatial(Anchor),
}

impl Locator {
    pub fn is_spatial(&self) -> bool {
        matches!(self, Locator::Spatial(_))
    }
}

/// Where an error is planted, independent of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InjectionSite {
    None,
    At { row: Locator, col: Locator },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub site: InjectionSite,
    pub delta0: f64,
    /// `δ = δ₀ hʳ`, `r ≥ 0`.
    pub rate: f64,
}

impl InjectionSpec {
    pub fn none() -> Self {
        InjectionSpec {
            site: InjectionSite::None,
            delta0: 0.0,
            rate: 0.0,
        }
    }

    pub fn new(site: InjectionSite, delta0: f64, rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "injection rate must be finite and non-negative, got {rate}"
            )));
        }
        if site != InjectionSite::None && (delta0 == 0.0 || !delta0.is_finite()) {
            return Err(Error::InvalidArgument(
                "delta0 must be finite and nonzero for a planted error".into(),
            ));
        }
        Ok(InjectionSpec { site, delta0, rate })
    }

    pub fn is_none(&self) -> bool {
        self.site == InjectionSite::None
    }

    pub fn column_locator(&self) -> Option<Locator> {
        match self.site {
            InjectionSite::None => None,
            InjectionSite::At { col, .. } => Some(col),
        }
    }
}

/// A concrete entry and magnitude for one refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedInjection {
    pub row: usize,
    pub col: usize,
    pub delta: f64,
}

/// Refinement-level information needed to resolve locators.
#[derive(Debug, Clone, Copy)]
pub enum LevelContext<'a> {
    OneD { elements: usize, domain: (f64, f64) },
    Efie { space: &'a RwgSpace },
}

impl LevelContext<'_> {
    pub fn unknowns(&self) -> usize {
        match self {
            LevelContext::OneD { elements, .. } => elements.saturating_sub(1),
            LevelContext::Efie { space } => space.len(),
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            LevelContext::OneD { elements, domain } => (domain.1 - domain.0) / *elements as f64,
            LevelContext::Efie { space } => space.mesh.h,
        }
    }

    fn anchor_point(&self, anchor: Anchor) -> Point {
        match (self, anchor) {
            (_, Anchor::Point(p)) => p,
            (LevelContext::OneD { domain, .. }, Anchor::ColumnDefault) => {
                [domain.0 + 0.25 * (domain.1 - domain.0), 0.0]
            }
            (LevelContext::OneD { domain, .. }, Anchor::Center) => {
                [0.5 * (domain.0 + domain.1), 0.0]
            }
            (LevelContext::Efie { .. }, _) => [0.0, 0.5],
        }
    }

    fn locate(&self, locator: Locator) -> Result<usize> {
        let n = self.unknowns();
        match locator {
            Locator::Index(k) => Ok(k),
            Locator::Spatial(anchor) => {
                let p = self.anchor_point(anchor);
                match self {
                    LevelContext::OneD { elements, domain } => {
                        let h = self.h();
                        let t = (p[0] - domain.0) / h;
                        let (lo, hi) = (t.floor(), t.ceil());
                        // Nearest node, lower node on ties.
                        let node = if t - lo <= hi - t { lo } else { hi };
                        if node < 1.0 || node > (*elements as f64 - 1.0) {
                            return Err(Error::InvalidArgument(format!(
                                "anchor {} has no interior node on a {elements}-element mesh",
                                p[0]
                            )));
                        }
                        Ok(node as usize - 1)
                    }
                    LevelContext::Efie { space } => {
                        let tol = 1e-9 * space.mesh.h;
                        let mut best = None::<(usize, f64)>;
                        for (j, b) in space.basis.iter().enumerate() {
                            let d = (b.midpoint[0] - p[0]).hypot(b.midpoint[1] - p[1]);
                            if best.is_none_or(|(_, bd)| d < bd - tol) {
                                best = Some((j, d));
                            }
                        }
                        best.map(|(j, _)| j).ok_or_else(|| {
                            Error::InvalidArgument(format!("no unknowns to anchor in ({n} total)"))
                        })
                    }
                }
            }
        }
    }
}

/// Resolves a spec on a level; `None` means no error is planted.
pub fn resolve(
    spec: &InjectionSpec,
    level: &LevelContext<'_>,
) -> Result<Option<ResolvedInjection>> {
    let InjectionSite::At { row, col } = spec.site else {
        return Ok(None);
    };
    let n = level.unknowns();
    let (r, c) = (level.locate(row)?, level.locate(col)?);
    if r >= n || c >= n {
        return Err(Error::InjectionOutOfBounds { row: r, col: c, n });
    }
    Ok(Some(ResolvedInjection {
        row: r,
        col: c,
        delta: spec.delta0 * level.h().powf(spec.rate),
    }))
}

/// Copy of `a` with entry `(row, col)` multiplied by `1 + δ`.
pub fn apply(a: &DenseMatrix, inj: &ResolvedInjection) -> Result<DenseMatrix> {
    if inj.row >= a.rows() || inj.col >= a.cols() {
        return Err(Error::InjectionOutOfBounds {
            row: inj.row,
            col: inj.col,
            n: a.rows(),
        });
    }
    let mut out = a.clone();
    out[(inj.row, inj.col)] *= 1.0 + inj.delta;
    Ok(out)
}

impl fmt::Display for InjectionSite {
    /// Textual form with one-based indices: `none`, `fixed:i,j`,
    /// `spatial-col:i`, `spatial:both`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InjectionSite::None => f.write_str("none"),
            InjectionSite::At {
                row: Locator::Index(i),
                col: Locator::Index(j),
            } => write!(f, "fixed:{},{}", i + 1, j + 1),
            InjectionSite::At {
                row: Locator::Index(i),
                col: Locator::Spatial(Anchor::ColumnDefault),
            } => write!(f, "spatial-col:{}", i + 1),
            InjectionSite::At {
                row: Locator::Spatial(Anchor::Center),
                col: Locator::Spatial(Anchor::Center),
            } => f.write_str("spatial:both"),
            InjectionSite::At { row, col } => write!(f, "custom:{row:?},{col:?}"),
        }
    }
}

fn parse_index(s: &str) -> Result<usize> {
    let k: usize = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad index '{s}'")))?;
    if k == 0 {
        return Err(Error::Parse("indices are one-based".into()));
    }
    Ok(k - 1)
}

impl FromStr for InjectionSite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(InjectionSite::None);
        }
        if s == "spatial:both" {
            return Ok(InjectionSite::At {
                row: Locator::Spatial(Anchor::Center),
                col: Locator::Spatial(Anchor::Center),
            });
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            let (i, j) = rest
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected fixed:i,j, got '{s}'")))?;
            return Ok(InjectionSite::At {
                row: Locator::Index(parse_index(i)?),
                col: Locator::Index(parse_index(j)?),
            });
        }
        if let Some(rest) = s.strip_prefix("spatial-col:") {
            return Ok(InjectionSite::At {
                row: Locator::Index(parse_index(rest)?),
                col: Locator::Spatial(Anchor::ColumnDefault),
            });
        }
        Err(Error::Parse(format!(
            "unknown injection '{s}' (expected none | fixed:i,j | spatial-col:i | spatial:both)"
        )))
    }
}
