//! Scenario execution and report assembly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use abp_core::abp::{abp_volume_lower_bound, coverage_report, AbpContext, AbpMode, CoverageReport, VolumeBound};
use abp_core::comparison::{build_model, trajectory_csv, TubeConfig, WarpedModel};
use abp_core::inequality::{
    check_fwc, check_heintze_karcher_tube, check_isoperimetric, check_log_sobolev, check_michael_simon,
    check_riemannian_fwc, check_riemannian_isoperimetric, check_sobolev_euclidean, refinement_tolerance,
    InequalityReport, RevolutionDomain,
};
use abp_core::mesh::{curvature, load_mesh, shapes, Mesh, TriMesh, VertexScalarField};
use abp_core::neumann::{self, Mode, NeumannProblem};
use abp_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::CheckId;
use crate::config::{Config, Geometry, Scenario};
use crate::riccati::{battery_case, closed_forms, equality_trajectories, BatteryCase, ClosedForms};
use crate::svg;

pub const DEFAULT_SEED: u64 = 20240607;
pub const DEFAULT_MESH_TOLERANCE: f64 = 5e-3;
pub const DEFAULT_MODEL_TOLERANCE: f64 = 1e-8;
pub const MONOTONE_SLACK: f64 = abp_core::comparison::MONOTONE_SLACK;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

/// A plottable series: `loglog` (error against `h`, with fitted slope) or
/// `trajectory` (linear axes, several curves).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Series {
    pub name: String,
    pub kind: String,
    pub x_label: String,
    pub y_label: String,
    pub curves: Vec<Curve>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: u32,
    pub report: InequalityReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCoverage {
    pub level: u32,
    pub report: CoverageReport,
    pub volume_bound: VolumeBound,
    pub solver: Option<neumann::SolverDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiccatiSummary {
    pub closed_forms: ClosedForms,
    pub cases: Vec<BatteryCase>,
    pub failed_cases: Vec<usize>,
    pub worst_relative_increase: f64,
    pub min_trace_derivative_margin: f64,
    pub min_trace_bound_margin: f64,
    pub max_q_asymmetry: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub check: &'static str,
    pub theorem: &'static str,
    pub settings: BTreeMap<String, String>,
    pub seed: u64,
    pub passed: bool,
    /// Failed criteria or the error that stopped the scenario.
    pub messages: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<LevelReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub coverage: Vec<LevelCoverage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub riccati: Option<RiccatiSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    #[serde(skip)]
    pub attachments: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub scenario_count: usize,
    pub passed_count: usize,
    pub passed: bool,
    pub scenarios: Vec<ScenarioOutcome>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
}

/// Runs every scenario; scenarios are independent and run in parallel, and
/// the report keeps config order.
pub fn run_config(config: &Config, options: RunOptions) -> RunReport {
    let seed = options.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let work = || -> Vec<ScenarioOutcome> {
        config
            .scenarios
            .par_iter()
            .map(|s| run_scenario(s, s.seed.unwrap_or(seed)))
            .collect()
    };
    let scenarios = match options.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    };
    let passed_count = scenarios.iter().filter(|s| s.passed).count();
    RunReport {
        tool: "abp-verify",
        version: env!("CARGO_PKG_VERSION"),
        seed,
        scenario_count: scenarios.len(),
        passed_count,
        passed: passed_count == scenarios.len(),
        scenarios,
    }
}

pub fn run_scenario(scenario: &Scenario, seed: u64) -> ScenarioOutcome {
    let mut out = ScenarioOutcome {
        name: scenario.name.clone(),
        check: scenario.check.id(),
        theorem: scenario.check.theorem(),
        settings: scenario.settings.clone(),
        seed,
        passed: false,
        messages: Vec::new(),
        levels: Vec::new(),
        coverage: Vec::new(),
        riccati: None,
        series: Vec::new(),
        attachments: Vec::new(),
    };
    let result = match scenario.check {
        CheckId::RiccatiSuite => run_riccati(scenario, seed, &mut out),
        CheckId::CoverageSuite => run_coverage(scenario, seed, &mut out),
        CheckId::RiemannianIsoperimetric | CheckId::RiemannianFwc | CheckId::HeintzeKarcher => {
            run_model_check(scenario, &mut out)
        }
        _ => run_mesh_check(scenario, &mut out),
    };
    match result {
        Ok(()) => out.passed = out.messages.is_empty(),
        Err(e) => {
            out.passed = false;
            out.messages.push(e.to_string());
        }
    }
    out
}

fn build_mesh(geometry: &Geometry, level: u32) -> Result<Mesh> {
    match geometry {
        Geometry::Shape { name, params } => shapes::builtin_shape(name, params, level),
        Geometry::MeshFile(path) => load_mesh(path, None),
    }
}

fn density_on(scenario: &Scenario, mesh: &TriMesh) -> Result<VertexScalarField> {
    if scenario.density.coords_used() > mesh.dim() {
        return Err(Error::Precondition(format!(
            "density `{}` uses more coordinates than the ambient dimension {}",
            scenario.density,
            mesh.dim()
        )));
    }
    Ok(VertexScalarField::from_fn(mesh.positions(), |x| scenario.density.eval(x)))
}

fn geometry_of(scenario: &Scenario) -> Result<&Geometry> {
    scenario
        .geometry
        .as_ref()
        .ok_or_else(|| Error::Precondition("scenario has no geometry".into()))
}

fn evaluate_mesh_check(scenario: &Scenario, mesh: Mesh) -> Result<InequalityReport> {
    match scenario.check {
        CheckId::Fwc => check_fwc(&mesh),
        CheckId::Isoperimetric => check_isoperimetric(&mesh.into_tri()?),
        CheckId::SobolevEuclidean => {
            let m = mesh.into_tri()?;
            check_sobolev_euclidean(&m, &density_on(scenario, &m)?)
        }
        CheckId::MichaelSimon => {
            let m = mesh.into_tri()?;
            check_michael_simon(&m, &density_on(scenario, &m)?)
        }
        CheckId::LogSobolev => {
            let m = mesh.into_tri()?;
            check_log_sobolev(&m, &density_on(scenario, &m)?)
        }
        other => Err(Error::Precondition(format!("`{}` is not a mesh check", other.id()))),
    }
}

fn run_mesh_check(scenario: &Scenario, out: &mut ScenarioOutcome) -> Result<()> {
    let geometry = geometry_of(scenario)?;
    let label = format!("{geometry}");
    for &level in &scenario.levels {
        let report = evaluate_mesh_check(scenario, build_mesh(geometry, level)?)?.with_geometry(label.clone());
        out.levels.push(LevelReport { level, report });
        if matches!(geometry, Geometry::MeshFile(_)) {
            break;
        }
    }
    let n = out.levels.len();
    if n >= 2 {
        let band = refinement_tolerance(&out.levels[n - 2].report, &out.levels[n - 1].report);
        let last = &mut out.levels[n - 1].report;
        *last = last.clone().with_tolerance(band);
    }
    judge(scenario, &out.levels[n - 1].report, DEFAULT_MESH_TOLERANCE, &mut out.messages);
    if let Some(target) = scenario.expect.target {
        if let Some(s) = convergence_series(&scenario.name, &out.levels, target) {
            out.series.push(s);
        }
    }
    Ok(())
}

fn judge(scenario: &Scenario, report: &InequalityReport, default_tol: f64, messages: &mut Vec<String>) {
    if !report.holds() {
        messages.push(format!(
            "inequality fails: margin {:e} beyond tolerance {:e}",
            report.margin, report.tolerance
        ));
    }
    let e = &scenario.expect;
    if let Some(target) = e.target {
        let tol = e.tolerance.unwrap_or(default_tol);
        if !((report.ratio - target).abs() <= tol) {
            messages.push(format!("ratio {} not within {tol:e} of {target}", report.ratio));
        }
    }
    if let Some(min) = e.min_ratio {
        if !(report.ratio > min) {
            messages.push(format!("ratio {} not above {min}", report.ratio));
        }
    }
    if let Some(min) = e.min_margin {
        if !(report.margin > min) {
            messages.push(format!("margin {} not above {min}", report.margin));
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[[f64; 2]]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|p| (p[0].ln(), p[1].ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn convergence_series(name: &str, levels: &[LevelReport], target: f64) -> Option<Series> {
    let points: Vec<[f64; 2]> = levels
        .iter()
        .filter_map(|l| {
            let h = l.report.mesh_stats?.h_max;
            let err = (l.report.ratio - target).abs();
            (err > 1e-13 && err.is_finite()).then_some([h, err])
        })
        .collect();
    if points.len() < 2 {
        return None;
    }
    Some(Series {
        name: format!("{name}.convergence"),
        kind: "loglog".into(),
        x_label: "h".into(),
        y_label: "|ratio - target|".into(),
        slope: loglog_slope(&points),
        curves: vec![Curve {
            label: name.to_string(),
            points,
        }],
    })
}

fn model_of(scenario: &Scenario) -> Result<WarpedModel> {
    let spec = scenario
        .model
        .ok_or_else(|| Error::InvalidModel("scenario has no model".into()))?;
    build_model(spec.n, spec.profile, spec.r_max)
}

fn run_model_check(scenario: &Scenario, out: &mut ScenarioOutcome) -> Result<()> {
    let model = model_of(scenario)?;
    let missing = |k: &str| Error::Precondition(format!("missing `{k}`"));
    let report = match scenario.check {
        CheckId::RiemannianIsoperimetric => check_riemannian_isoperimetric(
            &model,
            RevolutionDomain {
                inner: scenario.inner,
                outer: scenario.outer.ok_or_else(|| missing("outer"))?,
            },
        )?,
        CheckId::RiemannianFwc => check_riemannian_fwc(&model, scenario.rho.ok_or_else(|| missing("rho"))?)?,
        _ => check_heintze_karcher_tube(&TubeConfig::new(
            model,
            scenario.rho.ok_or_else(|| missing("rho"))?,
            scenario.radius.ok_or_else(|| missing("radius"))?,
        )?)?,
    };
    judge(scenario, &report, DEFAULT_MODEL_TOLERANCE, &mut out.messages);
    out.levels.push(LevelReport { level: 0, report });
    Ok(())
}

fn coverage_context<'a>(scenario: &Scenario, mode: AbpMode, mesh: &'a TriMesh) -> Result<(AbpContext<'a>, Option<neumann::SolverDiagnostics>)> {
    if mode == AbpMode::Fwc {
        return Ok((AbpContext::normal_map(mesh, curvature(mesh)?)?, None));
    }
    let pmode = match mode {
        AbpMode::Sobolev => Mode::Sobolev,
        AbpMode::MichaelSimon => Mode::MichaelSimon,
        _ => Mode::LogSobolev,
    };
    let curv = if mesh.is_planar() { None } else { Some(curvature(mesh)?) };
    let f = density_on(scenario, mesh)?;
    let problem = NeumannProblem::from_density(mesh, &f, pmode, curv.as_ref())?;
    let solution = neumann::solve(&problem)?;
    let diagnostics = solution.diagnostics.clone();
    let ctx = AbpContext::from_solution(mesh, pmode, &solution, &problem.weight.0, curv)?;
    Ok((ctx, Some(diagnostics)))
}

fn run_coverage(scenario: &Scenario, seed: u64, out: &mut ScenarioOutcome) -> Result<()> {
    let geometry = geometry_of(scenario)?;
    let mode = scenario
        .mode
        .ok_or_else(|| Error::Precondition("coverage needs a mode".into()))?;
    for &level in &scenario.levels {
        let mesh = build_mesh(geometry, level)?.into_tri()?;
        let (ctx, solver) = coverage_context(scenario, mode, &mesh)?;
        let report = coverage_report(&ctx, scenario.samples, None, seed)?;
        let volume_bound = abp_volume_lower_bound(&ctx, &report)?;
        out.coverage.push(LevelCoverage {
            level,
            report,
            volume_bound,
            solver,
        });
    }
    let min_covered = scenario.expect.min_covered.unwrap_or(0.99);
    let max_negative = scenario.expect.max_negative.unwrap_or(0.01);
    let last = &out.coverage[out.coverage.len() - 1].report;
    if last.covered_fraction < min_covered {
        out.messages
            .push(format!("covered fraction {} below {min_covered}", last.covered_fraction));
    }
    if last.negative_margin_fraction > max_negative {
        out.messages.push(format!(
            "negative-margin fraction {} above {max_negative}",
            last.negative_margin_fraction
        ));
    }
    // one sample of slack for the level-to-level comparison
    let slack = 1.0 / scenario.samples as f64;
    for w in out.coverage.windows(2) {
        let (a, b) = (&w[0].report, &w[1].report);
        if b.covered_fraction < a.covered_fraction - slack {
            out.messages.push(format!(
                "covered fraction drops under refinement: {} -> {}",
                a.covered_fraction, b.covered_fraction
            ));
        }
        if b.negative_margin_fraction > a.negative_margin_fraction + slack {
            out.messages.push(format!(
                "negative-margin fraction grows under refinement: {} -> {}",
                a.negative_margin_fraction, b.negative_margin_fraction
            ));
        }
    }
    Ok(())
}

fn run_riccati(scenario: &Scenario, seed: u64, out: &mut ScenarioOutcome) -> Result<()> {
    let closed = closed_forms()?;
    let cases: Vec<BatteryCase> = (0..scenario.count)
        .into_par_iter()
        .map(|i| battery_case(i, seed))
        .collect::<Result<_>>()?;
    let failed_cases: Vec<usize> = cases
        .iter()
        .filter(|c| !c.passed(MONOTONE_SLACK))
        .map(|c| c.index)
        .collect();
    if closed.affine_error > 1e-10 {
        out.messages.push(format!("affine closed form off by {:e}", closed.affine_error));
    }
    if closed.focal_error_steps > 1.0 {
        out.messages
            .push(format!("focal time off by {} steps", closed.focal_error_steps));
    }
    if closed.q_asymmetry > 1e-9 {
        out.messages.push(format!("Q asymmetry {:e}", closed.q_asymmetry));
    }
    if !failed_cases.is_empty() {
        out.messages
            .push(format!("{} of {} battery cases fail", failed_cases.len(), cases.len()));
    }

    let n = 3;
    let f = 1.0;
    let (g_traj, h_traj) = equality_trajectories(n, f)?;
    let g = abp_core::comparison::sobolev_profile(&g_traj, f, n);
    let h = abp_core::comparison::fwc_profile(&h_traj, -2.0, n);
    let pts = |t: &[f64], v: &[f64]| -> Vec<[f64; 2]> {
        t.iter().zip(v).step_by(20).map(|(a, b)| [*a, *b]).collect()
    };
    out.series.push(Series {
        name: format!("{}.sobolev_equality", scenario.name),
        kind: "trajectory".into(),
        x_label: "t".into(),
        y_label: "value".into(),
        slope: None,
        curves: vec![
            Curve { label: "g(t)".into(), points: pts(&g_traj.t, &g) },
            Curve { label: "det P".into(), points: pts(&g_traj.t, &g_traj.det_p) },
        ],
    });
    out.series.push(Series {
        name: format!("{}.fwc_equality", scenario.name),
        kind: "trajectory".into(),
        x_label: "t".into(),
        y_label: "value".into(),
        slope: None,
        curves: vec![
            Curve { label: "h(t)".into(), points: pts(&h_traj.t, &h) },
            Curve { label: "det P".into(), points: pts(&h_traj.t, &h_traj.det_p) },
        ],
    });
    out.attachments.push((
        format!("{}.sobolev_equality.csv", scenario.name),
        trajectory_csv(&g_traj, Some((f, n)), None),
    ));

    out.riccati = Some(RiccatiSummary {
        worst_relative_increase: cases.iter().map(|c| c.worst_relative_increase).fold(f64::NEG_INFINITY, f64::max),
        min_trace_derivative_margin: cases.iter().map(|c| c.trace_derivative_margin).fold(f64::INFINITY, f64::min),
        min_trace_bound_margin: cases.iter().map(|c| c.trace_bound_margin).fold(f64::INFINITY, f64::min),
        max_q_asymmetry: cases.iter().map(|c| c.q_asymmetry).fold(0.0, f64::max),
        closed_forms: closed,
        cases,
        failed_cases,
    });
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per inequality report.
pub fn tables_csv(report: &RunReport) -> String {
    let mut out = String::from("scenario,theorem,geometry,level,h_max,lhs,rhs,ratio,margin,tolerance,holds\n");
    for s in &report.scenarios {
        for l in &s.levels {
            let r = &l.report;
            let h = r.mesh_stats.map_or(String::new(), |m| format!("{:e}", m.h_max));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{}",
                csv_field(&s.name),
                r.theorem,
                csv_field(&r.geometry),
                l.level,
                h,
                r.lhs,
                r.rhs,
                r.ratio,
                r.margin,
                r.tolerance,
                r.holds()
            );
        }
    }
    out
}

/// One row per coverage level.
pub fn coverage_csv(report: &RunReport) -> String {
    let mut out = String::from(
        "scenario,mode,level,h,samples,covered_fraction,negative_margin_fraction,strict_negative_fraction,min_margin,max_defect,volume_ratio\n",
    );
    for s in &report.scenarios {
        for c in &s.coverage {
            let r = &c.report;
            let _ = writeln!(
                out,
                "{},{},{},{:e},{},{},{},{},{:e},{:e},{:e}",
                csv_field(&s.name),
                r.mode.name(),
                c.level,
                r.h,
                r.sample_count,
                r.covered_fraction,
                r.negative_margin_fraction,
                r.strict_negative_fraction,
                r.min_margin,
                r.max_defect,
                c.volume_bound.ratio
            );
        }
    }
    out
}

pub fn report_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialises");
    s.push('\n');
    s
}

/// Writes `report.json`, `tables.csv`, `coverage.csv` (when any coverage ran),
/// trajectory CSVs and one SVG per series into `dir`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: &str| -> std::io::Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    put("report.json", &report_json(report))?;
    put("tables.csv", &tables_csv(report))?;
    if report.scenarios.iter().any(|s| !s.coverage.is_empty()) {
        put("coverage.csv", &coverage_csv(report))?;
    }
    for s in &report.scenarios {
        for (name, body) in &s.attachments {
            put(name, body)?;
        }
        for series in &s.series {
            put(&format!("{}.svg", series.name), &svg::render(series))?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn run(text: &str) -> RunReport {
        let cfg = parse_config(text, Path::new(".")).unwrap();
        run_config(&cfg, RunOptions { jobs: Some(2), seed: None })
    }

    #[test]
    fn slope_of_quadratic_data() {
        let pts: Vec<[f64; 2]> = [0.4, 0.2, 0.1].iter().map(|h| [*h, 3.0 * h * h]).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn disk_isoperimetric_passes_with_series() {
        let r = run("[iso]\ncheck = isoperimetric\nshape = disk\nlevels = 2, 3, 4\ntarget = 1\ntolerance = 5e-3\n");
        let s = &r.scenarios[0];
        assert!(s.passed, "{:?}", s.messages);
        assert_eq!(s.series.len(), 1);
        assert!((s.series[0].slope.unwrap() - 2.0).abs() < 0.1);
        assert!(r.passed);
    }

    #[test]
    fn codimension_one_michael_simon_fails_but_batch_continues() {
        let r = run("[ms]\ncheck = michael_simon\nshape = icosphere\nlevels = 1\n\n[iso]\ncheck = isoperimetric\nshape = square\nlevels = 1\n");
        assert!(!r.scenarios[0].passed);
        assert!(r.scenarios[0].messages[0].contains("hypothesis"));
        assert!(r.scenarios[1].passed);
        assert!(!r.passed);
        assert_eq!(r.passed_count, 1);
    }

    #[test]
    fn model_checks_use_closed_form_tolerance() {
        let r = run("[c]\ncheck = riemannian_fwc\nmodel = cone\nn = 3\nalpha = 0.8\nrho = 2\ntarget = 1\n");
        assert!(r.scenarios[0].passed, "{:?}", r.scenarios[0].messages);
        let r = run("[c]\ncheck = riemannian_fwc\nmodel = cone\nn = 3\nalpha = 1.3\nrho = 2\n");
        assert!(r.scenarios[0].messages[0].contains("invalid model"));
    }

    #[test]
    fn tables_have_one_row_per_level() {
        let r = run("[iso]\ncheck = isoperimetric\nshape = square\nlevels = 1, 2\n");
        let csv = tables_csv(&r);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("iso,isoperimetric,"));
    }
}
