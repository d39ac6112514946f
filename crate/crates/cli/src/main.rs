//! `mms-verify`: runs catalog cases and writes reports, plot data and a summary.
//!
//! Exit status: 0 when every observed order matches its prediction within the
//! margin, 1 on a numerical failure, 2 on a usage error, 3 on an order mismatch.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use mms_verify::catalog::{self, CaseCatalogEntry, CaseSetup};
use mms_verify::injection::{InjectionSite, InjectionSpec};
use mms_verify::linalg::DEFAULT_RANK_TOLERANCE;
use mms_verify::plot::{emit_plot_data, PlotFormat};
use mms_verify::verify::{
    predicted_order, run_study_cached, AssemblyCache, CaseParameters, ConvergenceReport, Metric,
    StudyConfig, CLEAN_ORDER, DEFAULT_MARGIN,
};
use mms_verify::Error;

const EXIT_NUMERICAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const THREADS_ENV: &str = "MMS_VERIFY_THREADS";
const DEFAULT_OUT: &str = "mms-verify-out";

#[derive(Parser)]
#[command(
    name = "mms-verify",
    version,
    about = "Convergence studies with planted coding errors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run catalog cases and write per-case CSV, JSON and plot data.
    Run(Box<RunArgs>),
    /// Print the case catalog with predicted orders.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Case ids such as `1d/1b` or `efie/3c`.
    ids: Vec<String>,
    /// Comma-separated case ids.
    #[arg(long, value_delimiter = ',')]
    cases: Vec<String>,
    /// All eight 1D cases.
    #[arg(long)]
    all_1d: bool,
    /// All twelve EFIE cases.
    #[arg(long)]
    all_efie: bool,
    /// Every catalog case.
    #[arg(long)]
    all: bool,
    /// Refinement levels (elements in 1D, m for the EFIE), comma-separated.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Injection magnitude at h = 1.
    #[arg(long)]
    delta0: Option<f64>,
    /// Injection rate r in δ = δ₀ hʳ.
    #[arg(long)]
    rate_r: Option<f64>,
    /// Relative rank tolerance of the pivoted QR.
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Allowed gap between observed and predicted orders.
    #[arg(long)]
    margin: Option<f64>,
    /// Exactness degree of the EFIE matrix quadrature.
    #[arg(long)]
    quad_degree: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot data format: gnuplot or csv.
    #[arg(long)]
    format: Option<PlotFormat>,
    /// Injection site overriding the catalog: none, fixed:i,j, spatial-col:i or spatial:both.
    #[arg(long)]
    inject: Option<InjectionSite>,
    /// JSON file with defaults for any of the options above.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Contents of a `--config` file. Command-line flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    levels: Option<Vec<usize>>,
    delta0: Option<f64>,
    rate_r: Option<f64>,
    rank_tol: Option<f64>,
    margin: Option<f64>,
    quad_degree: Option<usize>,
    out: Option<PathBuf>,
    format: Option<PlotFormat>,
    inject: Option<String>,
}

struct Settings {
    levels: Option<Vec<usize>>,
    delta0: Option<f64>,
    rate_r: Option<f64>,
    quad_degree: Option<usize>,
    inject: Option<InjectionSite>,
    study: StudyConfig,
    out: PathBuf,
    format: PlotFormat,
}

struct Planned {
    case: CaseCatalogEntry,
    spec: InjectionSpec,
    levels: Vec<usize>,
}

struct Row {
    id: String,
    metric: Metric,
    observed: Option<f64>,
    predicted: f64,
    detected: bool,
    matches: bool,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        return usage(msg);
    }
    match cli.command {
        Command::List => {
            print!("{}", render_catalog());
            ExitCode::SUCCESS
        }
        Command::Run(args) => run(*args),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn render_catalog() -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<9} {:<22} {:<14} {:>7} {:>5} {:>5}",
        "id", "setup", "site", "delta0", "tau", "eh"
    );
    for case in catalog::catalog() {
        let spec = case.injection(None, None).expect("catalog injection");
        let setup = match case.setup {
            CaseSetup::OneD { solution } => format!("{solution:?}"),
            CaseSetup::Efie { alpha, beta } => format!("alpha={alpha} beta={beta}"),
        };
        let _ = writeln!(
            s,
            "{:<9} {:<22} {:<14} {:>7} {:>5} {:>5}",
            case.id,
            setup,
            case.site.to_string(),
            case.delta0,
            case.expected_order(&spec, Metric::Truncation),
            case.expected_order(&spec, Metric::Discretization),
        );
    }
    s
}

fn load_config(path: &Path) -> Result<ConfigFile, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

fn settings(args: &RunArgs) -> Result<Settings, String> {
    let file = match &args.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    let inject = match (&args.inject, &file.inject) {
        (Some(site), _) => Some(*site),
        (None, Some(text)) => Some(text.parse::<InjectionSite>().map_err(|e| e.to_string())?),
        (None, None) => None,
    };
    Ok(Settings {
        levels: args.levels.clone().or(file.levels),
        delta0: args.delta0.or(file.delta0),
        rate_r: args.rate_r.or(file.rate_r),
        quad_degree: args.quad_degree.or(file.quad_degree),
        inject,
        study: StudyConfig {
            rank_tolerance: args
                .rank_tol
                .or(file.rank_tol)
                .unwrap_or(DEFAULT_RANK_TOLERANCE),
            margin: args.margin.or(file.margin).unwrap_or(DEFAULT_MARGIN),
        },
        out: args
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        format: args.format.or(file.format).unwrap_or(PlotFormat::Gnuplot),
    })
}

fn selected_cases(args: &RunArgs) -> Result<Vec<CaseCatalogEntry>, String> {
    let all = catalog::catalog();
    let mut out: Vec<CaseCatalogEntry> = Vec::new();
    let push = |c: CaseCatalogEntry, out: &mut Vec<CaseCatalogEntry>| {
        if !out.iter().any(|o| o.id == c.id) {
            out.push(c);
        }
    };
    for id in args.ids.iter().chain(&args.cases) {
        push(catalog::find(id).map_err(|e| e.to_string())?, &mut out);
    }
    for c in all {
        let one_d = matches!(c.setup, CaseSetup::OneD { .. });
        if args.all || (args.all_1d && one_d) || (args.all_efie && !one_d) {
            push(c, &mut out);
        }
    }
    if out.is_empty() {
        return Err("no cases selected (give ids, --cases, --all-1d, --all-efie or --all)".into());
    }
    Ok(out)
}

fn plan(case: CaseCatalogEntry, s: &Settings) -> Result<Planned, String> {
    let spec = match s.inject {
        Some(InjectionSite::None) => Ok(InjectionSpec::none()),
        Some(site) => InjectionSpec::new(
            site,
            s.delta0.unwrap_or(case.delta0),
            s.rate_r.unwrap_or(0.0),
        ),
        None => case.injection(s.delta0, s.rate_r),
    }
    .map_err(|e| format!("{}: {e}", case.id))?;
    let levels = s.levels.clone().unwrap_or_else(|| case.default_levels());
    let mut distinct = levels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || distinct.len() != levels.len() {
        return Err(format!(
            "{}: a study needs at least 3 distinct refinement levels, got {levels:?}",
            case.id
        ));
    }
    Ok(Planned { case, spec, levels })
}

fn is_usage_error(err: &Error) -> bool {
    match err {
        Error::Level { source, .. } => is_usage_error(source),
        Error::InvalidArgument(_) | Error::Parse(_) => true,
        _ => false,
    }
}

fn compare(planned: &Planned, report: &ConvergenceReport, margin: f64) -> Vec<Row> {
    let params = CaseParameters::new(planned.case.kind(), planned.case.q, &planned.spec);
    [Metric::Truncation, Metric::Discretization]
        .into_iter()
        .map(|metric| {
            let predicted = predicted_order(&params, metric);
            let observed = report.headline(metric);
            let matches = match observed {
                Some(p) => (p - predicted).abs() <= margin,
                None => predicted >= CLEAN_ORDER,
            };
            Row {
                id: planned.case.id.clone(),
                metric,
                observed,
                predicted,
                detected: report.verdict(metric).is_some_and(|v| v.detected),
                matches,
            }
        })
        .collect()
}

fn render_summary(rows: &[Row]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<9} {:<6} {:>9} {:>9} {:>8} {:>6}",
        "case", "metric", "observed", "predicted", "detected", "status"
    );
    for r in rows {
        let observed = r
            .observed
            .map_or_else(|| "floor".to_string(), |p| format!("{p:.3}"));
        let _ = writeln!(
            s,
            "{:<9} {:<6} {:>9} {:>9} {:>8} {:>6}",
            r.id,
            r.metric.short_name(),
            observed,
            r.predicted,
            if r.detected { "yes" } else { "no" },
            if r.matches { "ok" } else { "MISS" }
        );
    }
    s
}

fn write_outputs(
    dir: &Path,
    id: &str,
    report: &ConvergenceReport,
    format: PlotFormat,
) -> std::io::Result<()> {
    let stem = id.replace('/', "_");
    fs::write(dir.join(format!("{stem}.csv")), report.to_csv())?;
    fs::write(dir.join(format!("{stem}.json")), report.to_json())?;
    let plot = emit_plot_data(report, format);
    fs::write(
        dir.join(format!("{stem}_plot.{}", format.extension())),
        plot.render(),
    )
}

fn run(args: RunArgs) -> ExitCode {
    let s = match settings(&args) {
        Ok(s) => s,
        Err(msg) => return usage(msg),
    };
    let cases = match selected_cases(&args) {
        Ok(c) => c,
        Err(msg) => return usage(msg),
    };
    let plans: Vec<Planned> = match cases.into_iter().map(|c| plan(c, &s)).collect() {
        Ok(p) => p,
        Err(msg) => return usage(msg),
    };
    if let Err(e) = fs::create_dir_all(&s.out) {
        return usage(format!("cannot create {}: {e}", s.out.display()));
    }

    let cache = AssemblyCache::new();
    let mut rows = Vec::new();
    let mut numerical_failure = false;
    for planned in &plans {
        let problem = planned.case.problem(s.quad_degree);
        let report =
            match run_study_cached(&problem, &planned.levels, &planned.spec, &s.study, &cache) {
                Ok(r) => r,
                Err(e) if is_usage_error(&e) => return usage(format!("{}: {e}", planned.case.id)),
                Err(e) => {
                    eprintln!("error: {}: {e}", planned.case.id);
                    numerical_failure = true;
                    continue;
                }
            };
        if let Err(e) = write_outputs(&s.out, &planned.case.id, &report, s.format) {
            eprintln!("error: writing outputs for {}: {e}", planned.case.id);
            return ExitCode::from(EXIT_NUMERICAL);
        }
        rows.extend(compare(planned, &report, s.study.margin));
    }

    let summary = render_summary(&rows);
    print!("{summary}");
    if let Err(e) = fs::write(s.out.join("summary.txt"), &summary) {
        eprintln!("error: writing summary: {e}");
        return ExitCode::from(EXIT_NUMERICAL);
    }
    if numerical_failure {
        ExitCode::from(EXIT_NUMERICAL)
    } else if rows.iter().all(|r| r.matches) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_MISMATCH)
    }
}
