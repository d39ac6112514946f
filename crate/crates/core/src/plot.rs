//! Log-log plot data for convergence reports.
//!
//! Each metric contributes its error column plus reference lines of slope 0, 1
//! and 2 anchored at the coarsest level's error.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::verify::{ConvergenceReport, Metric, OrderEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotFormat {
    /// Whitespace-separated columns with `#` comments.
    Gnuplot,
    Csv,
}

impl PlotFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            PlotFormat::Gnuplot => "dat",
            PlotFormat::Csv => "csv",
        }
    }
}

impl FromStr for PlotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "gnuplot" => Ok(PlotFormat::Gnuplot),
            "csv" => Ok(PlotFormat::Csv),
            other => Err(Error::Parse(format!(
                "unknown plot format '{other}' (expected gnuplot or csv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub format: PlotFormat,
    pub columns: Vec<String>,
    /// One row per level, same order as the report.
    pub rows: Vec<Vec<f64>>,
    /// Metrics left out, with the reason.
    pub notes: Vec<String>,
}

pub const GUIDE_SLOPES: [u32; 3] = [0, 1, 2];

pub fn emit_plot_data(report: &ConvergenceReport, format: PlotFormat) -> PlotData {
    let h: Vec<f64> = report.levels.iter().map(|l| l.h).collect();
    let mut columns = vec!["h".to_string()];
    let mut data: Vec<Vec<f64>> = vec![h.clone()];
    let mut notes = Vec::new();

    for metric in Metric::ALL {
        let Some(estimate) = report.order(metric) else {
            continue;
        };
        let name = metric.short_name();
        if *estimate == OrderEstimate::RoundoffFloor {
            notes.push(format!("{name}: omitted, at round-off floor"));
            continue;
        }
        let eps: Vec<f64> = report
            .levels
            .iter()
            .map(|l| l.metric(metric).expect("metric present at every level"))
            .collect();
        let (h0, e0) = (h[0], eps[0]);
        columns.push(name.to_string());
        data.push(eps);
        for p in GUIDE_SLOPES {
            columns.push(format!("{name}_slope{p}"));
            data.push(h.iter().map(|x| e0 * (x / h0).powi(p as i32)).collect());
        }
    }

    let rows = (0..h.len())
        .map(|k| data.iter().map(|c| c[k]).collect())
        .collect();
    PlotData {
        format,
        columns,
        rows,
        notes,
    }
}

impl PlotData {
    /// Renders the table. CSV output carries no notes; see [`PlotData::notes`].
    pub fn render(&self) -> String {
        let mut s = String::new();
        match self.format {
            PlotFormat::Gnuplot => {
                for n in &self.notes {
                    let _ = writeln!(s, "# note: {n}");
                }
                let _ = writeln!(s, "# {}", self.columns.join(" "));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
                    let _ = writeln!(s, "{}", cells.join(" "));
                }
            }
            PlotFormat::Csv => {
                let _ = writeln!(s, "{}", self.columns.join(","));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    let _ = writeln!(s, "{}", cells.join(","));
                }
            }
        }
        s
    }
}
