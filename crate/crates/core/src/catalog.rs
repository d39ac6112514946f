//! Named verification cases: the 1D analogy (`1d/1a` … `1d/2d`) and the EFIE
//! (`efie/1a` … `efie/3d`).
//!
//! Letters select the injection site: `a` none, `b` fixed `(1, 2)`, `c` fixed
//! row 2 with a spatially fixed column, `d` spatially fixed row and column.

use serde::{Deserialize, Serialize};

use crate::efie::{ManufacturedEfie, DEFAULT_QUAD_DEGREE};
use crate::error::{Error, Result};
use crate::injection::{InjectionSite, InjectionSpec};
use crate::model1d::Manufactured1d;
use crate::verify::{
    predicted_order, CaseParameters, Metric, Problem, ProblemKind, DEFAULT_LEVELS_1D,
    DEFAULT_LEVELS_EFIE,
};

pub const DELTA0_1D: f64 = 1.0 / 20.0;
pub const DELTA0_EFIE: f64 = 1.0 / 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solution1d {
    SinPiX,
    SinPiXSquared,
}

impl Solution1d {
    pub fn manufactured(&self) -> Manufactured1d {
        match self {
            Solution1d::SinPiX => Manufactured1d::sin_pi_x(),
            Solution1d::SinPiXSquared => Manufactured1d::sin_pi_x_squared(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseSetup {
    OneD { solution: Solution1d },
    Efie { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseCatalogEntry {
    pub id: String,
    pub setup: CaseSetup,
    pub site: InjectionSite,
    pub delta0: f64,
    /// Leading Taylor power of the solution at the fixed-index end.
    pub q: u32,
}

const LETTERS: [(char, &str); 4] = [
    ('a', "none"),
    ('b', "fixed:1,2"),
    ('c', "spatial-col:2"),
    ('d', "spatial:both"),
];

/// All twenty cases, 1D first.
pub fn catalog() -> Vec<CaseCatalogEntry> {
    let mut out = Vec::new();
    let one_d = [
        (1, Solution1d::SinPiX, 1),
        (2, Solution1d::SinPiXSquared, 2),
    ];
    for (family, solution, q) in one_d {
        for (letter, site) in LETTERS {
            out.push(CaseCatalogEntry {
                id: format!("1d/{family}{letter}"),
                setup: CaseSetup::OneD { solution },
                site: site.parse().expect("catalog site"),
                delta0: DELTA0_1D,
                q,
            });
        }
    }
    let efie = [(1, 1.0, 1.0), (2, 1.0, 0.0), (3, 0.0, 1.0)];
    for (family, alpha, beta) in efie {
        for (letter, site) in LETTERS {
            out.push(CaseCatalogEntry {
                id: format!("efie/{family}{letter}"),
                setup: CaseSetup::Efie { alpha, beta },
                site: site.parse().expect("catalog site"),
                delta0: DELTA0_EFIE,
                // u·n̂ vanishes linearly toward the corner (−1, 0).
                q: 1,
            });
        }
    }
    out
}

pub fn find(id: &str) -> Result<CaseCatalogEntry> {
    catalog()
        .into_iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown case id '{id}'")))
}

impl CaseCatalogEntry {
    pub fn kind(&self) -> ProblemKind {
        match self.setup {
            CaseSetup::OneD { .. } => ProblemKind::OneD,
            CaseSetup::Efie { .. } => ProblemKind::Efie,
        }
    }

    pub fn problem(&self, quad_degree: Option<usize>) -> Problem {
        match self.setup {
            CaseSetup::OneD { solution } => Problem::OneD(solution.manufactured()),
            CaseSetup::Efie { alpha, beta } => Problem::Efie {
                manufactured: ManufacturedEfie::standard(alpha, beta),
                quad_degree: quad_degree.unwrap_or(DEFAULT_QUAD_DEGREE),
            },
        }
    }

    pub fn default_levels(&self) -> Vec<usize> {
        match self.setup {
            CaseSetup::OneD { .. } => DEFAULT_LEVELS_1D.to_vec(),
            CaseSetup::Efie { .. } => DEFAULT_LEVELS_EFIE.to_vec(),
        }
    }

    pub fn injection(&self, delta0: Option<f64>, rate: Option<f64>) -> Result<InjectionSpec> {
        if self.site == InjectionSite::None {
            return Ok(InjectionSpec::none());
        }
        InjectionSpec::new(
            self.site,
            delta0.unwrap_or(self.delta0),
            rate.unwrap_or(0.0),
        )
    }

    pub fn expected_order(&self, spec: &InjectionSpec, metric: Metric) -> f64 {
        predicted_order(&CaseParameters::new(self.kind(), self.q, spec), metric)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalog_ids_are_unique_and_complete() {
        let cat = catalog();
        assert_eq!(cat.len(), 20);
        let ids: HashSet<_> = cat.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids.len(), cat.len());
        assert!(find("1d/2c").is_ok());
        assert!(find("efie/3d").is_ok());
        assert!(find("efie/4a").is_err());
    }

    #[test]
    fn one_d_family_predictions() {
        let orders: Vec<(f64, f64)> = ["1d/1a", "1d/1b", "1d/1c", "1d/1d"]
            .iter()
            .map(|id| {
                let c = find(id).unwrap();
                let spec = c.injection(None, None).unwrap();
                (
                    c.expected_order(&spec, Metric::Truncation),
                    c.expected_order(&spec, Metric::Discretization),
                )
            })
            .collect();
        assert_eq!(orders, vec![(2.0, 2.0), (2.0, 1.0), (1.0, 0.0), (1.0, 0.0)]);
        let c = find("1d/2b").unwrap();
        let spec = c.injection(None, None).unwrap();
        assert_eq!(c.expected_order(&spec, Metric::Discretization), 2.0);
    }
}
