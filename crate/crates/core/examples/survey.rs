//! Runs every catalog case at its default levels and prints observed orders.

use std::time::Instant;

use mms_verify::catalog;
use mms_verify::verify::{run_study_cached, AssemblyCache, Metric, StudyConfig};

fn main() -> mms_verify::Result<()> {
    let cache = AssemblyCache::new();
    let cfg = StudyConfig::default();
    for case in catalog::catalog() {
        let t = Instant::now();
        let spec = case.injection(None, None)?;
        let report = run_study_cached(
            &case.problem(None),
            &case.default_levels(),
            &spec,
            &cfg,
            &cache,
        )?;
        let mut line = format!("{:<8}", case.id);
        for metric in [Metric::Truncation, Metric::Discretization] {
            let slopes = match report.order(metric) {
                Some(mms_verify::verify::OrderEstimate::Slopes { slopes, .. }) => slopes
                    .iter()
                    .map(|s| format!("{s:.3}"))
                    .collect::<Vec<_>>()
                    .join(" "),
                _ => "floor".into(),
            };
            line += &format!(
                " {}: [{}] (pred {})",
                metric.short_name(),
                slopes,
                case.expected_order(&spec, metric)
            );
        }
        for metric in [Metric::TruncationDeviation, Metric::DiscretizationDeviation] {
            if let Some(p) = report.order(metric) {
                line += &format!(" {}: {p}", metric.short_name());
            }
        }
        let ranks: Vec<usize> = report.levels.iter().map(|l| l.rank).collect();
        println!("{line} ranks {ranks:?} {:.2}s", t.elapsed().as_secs_f64());
    }
    Ok(())
}
