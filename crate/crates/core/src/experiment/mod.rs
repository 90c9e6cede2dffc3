//! File-driven runs and sweeps behind the `tvopt` binary.
//!
//! A run directory holds:
//!
//! * `trajectory.csv` / `trajectory.json`: the per-sample record
//! * `metrics.json`: [`MetricsReport`] plus run identification
//! * `error_vs_k.dat`: two columns `k error`
//! * `spec.toml`: the resolved spec of the run
//!
//! A sweep directory holds one run directory per grid point, `summary.txt`
//! and `summary.csv`, and when `h` is swept, `order_fit.json` with one fit
//! per combination of the other axes and `error_vs_h*.dat` files.

mod spec;

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use spec::{
    AxisValue, ExperimentSpec, GridPoint, InitialSpec, MethodSpec, OutputFormat, OutputSpec,
    PredictionSpec, ProblemSpec, ScheduleSpec, SchemeChoice, SweepSpec, CUSTOM_PROBLEM,
};

use crate::metrics::OrderFit;
use crate::oracle::{registry, solve_batch, BATCH_MAX_ITERATIONS, BATCH_TOLERANCE};
use crate::pipeline::{execute, random_unit, RunOutcome, RunPlan};
use crate::problem::validate_instance;
use crate::{Error, Method, MetricsReport, PredictionMode, Result, Vector};

/// Command-line overrides shared by `run` and `sweep`.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    /// Sweep worker count; defaults to the available parallelism.
    pub workers: Option<usize>,
    /// Seed of the initial-point perturbation; overrides `initial.seed`.
    pub seed: Option<u64>,
}

impl RunOptions {
    fn out_dir(&self, spec: &ExperimentSpec) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(&spec.output.dir))
    }

    fn format(&self, spec: &ExperimentSpec) -> OutputFormat {
        self.format.unwrap_or(spec.output.format)
    }

    fn seed(&self, spec: &ExperimentSpec) -> u64 {
        self.seed.unwrap_or(spec.initial.seed)
    }
}

/// Contents of `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub problem: String,
    pub method: String,
    pub scheme: String,
    pub h: f64,
    pub step: f64,
    pub corrections: usize,
    pub drift_source: Option<String>,
    pub warnings: Vec<String>,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub metrics: MetricsFile,
}

fn scheme_name(plan: &RunPlan) -> String {
    match &plan.prediction {
        None => "correction-only".into(),
        Some(pc) => match pc.mode {
            PredictionMode::ClosedForm => format!("prediction-correction (closed-form, γ={})", pc.gamma),
            PredictionMode::ApproximateProjected => format!(
                "prediction-correction (approximate, P={}, β={})",
                pc.steps, pc.step
            ),
        },
    }
}

fn assumptions(plan: &RunPlan) -> String {
    let base = match plan.solver.method {
        Method::DualAscent => "strongly convex; L-smooth; A full row rank",
        _ => "strongly convex; L-smooth; bounded drift C0",
    };
    match &plan.prediction {
        None => base.into(),
        Some(_) => format!("{base}; bounded C1 C2 C3"),
    }
}

fn metrics_file(plan: &RunPlan, outcome: &RunOutcome) -> MetricsFile {
    let meta = &outcome.record.meta;
    MetricsFile {
        problem: plan.benchmark.name.clone(),
        method: plan.solver.method.name().into(),
        scheme: scheme_name(plan),
        h: plan.schedule.period(),
        step: plan.solver.step,
        corrections: plan.solver.corrections,
        drift_source: meta.drift_source.clone(),
        warnings: meta.warnings.clone(),
        metrics: outcome.metrics.clone(),
    }
}

fn write_run(dir: &Path, spec: &ExperimentSpec, plan: &RunPlan, outcome: &RunOutcome, format: OutputFormat) -> Result<MetricsFile> {
    fs::create_dir_all(dir)?;
    if format.csv() {
        let file = BufWriter::new(fs::File::create(dir.join("trajectory.csv"))?);
        outcome.record.write_csv(file)?;
    }
    if format.json() {
        fs::write(dir.join("trajectory.json"), outcome.record.to_json()?)?;
    }
    let metrics = metrics_file(plan, outcome);
    fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&metrics)?)?;
    let mut dat = String::from("# k error\n");
    for row in outcome.record.rows() {
        if let Some(e) = row.tracking_error {
            writeln!(dat, "{} {:?}", row.k, e).expect("writing to a string");
        }
    }
    fs::write(dir.join("error_vs_k.dat"), dat)?;
    fs::write(dir.join("spec.toml"), spec.to_toml()?)?;
    Ok(metrics)
}

/// Executes the single run described by the spec at `path` and writes its
/// files to the output directory.
pub fn cmd_run(path: &Path, options: &RunOptions) -> Result<RunReport> {
    let spec = ExperimentSpec::load(path)?;
    if spec.sweep.is_some() {
        log::warn!("spec has a [sweep] table; `run` ignores it");
    }
    let plan = spec.plan(options.seed(&spec))?;
    let outcome = execute(&plan)?;
    let dir = options.out_dir(&spec);
    let mut resolved = spec.clone();
    resolved.sweep = None;
    let metrics = write_run(&dir, &resolved, &plan, &outcome, options.format(&spec))?;
    Ok(RunReport { dir, metrics })
}

/// One row of a sweep summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub point: String,
    pub group: String,
    pub h: f64,
    pub method: String,
    pub scheme: String,
    pub assumptions: String,
    pub corrections: usize,
    pub asymptotic_error: Option<f64>,
    pub mean_error: Option<f64>,
    pub violations: Option<usize>,
    pub gradient: Option<u64>,
    pub hessian: Option<u64>,
    pub gradient_tx: Option<u64>,
    pub projection: Option<u64>,
    pub prox: Option<u64>,
    /// `ok`, or the failure message.
    pub status: String,
}

impl SummaryRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub group: String,
    pub fit: Option<OrderFit>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub dir: PathBuf,
    pub rows: Vec<SummaryRow>,
    pub fits: Option<Vec<GroupFit>>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }
}

fn run_point(point: &GridPoint, seed: u64, dir: &Path, format: OutputFormat) -> SummaryRow {
    let label = point.label();
    let plan = point.plan(seed);
    let (method, scheme, assumptions_used) = match &plan {
        Ok(plan) => (plan.solver.method.name().to_string(), scheme_name(plan), assumptions(plan)),
        Err(_) => (point.spec.method.kind.name().to_string(), String::new(), String::new()),
    };
    let mut row = SummaryRow {
        point: label.clone(),
        group: point.group_label(),
        h: point.h(),
        method,
        scheme,
        assumptions: assumptions_used,
        corrections: point.spec.method.corrections,
        asymptotic_error: None,
        mean_error: None,
        violations: None,
        gradient: None,
        hessian: None,
        gradient_tx: None,
        projection: None,
        prox: None,
        status: "ok".into(),
    };
    let result = plan.and_then(|plan| {
        let outcome = execute(&plan)?;
        write_run(&dir.join(&label), &point.spec, &plan, &outcome, format)
    });
    match result {
        Ok(m) => {
            let c = m.metrics.counts;
            row.asymptotic_error = Some(m.metrics.asymptotic_error);
            row.mean_error = Some(m.metrics.mean_error);
            row.violations = Some(m.metrics.contraction_violations);
            row.gradient = Some(c.gradient);
            row.hessian = Some(c.hessian);
            row.gradient_tx = Some(c.gradient_tx);
            row.projection = Some(c.projection);
            row.prox = Some(c.prox);
        }
        Err(e) => {
            log::error!("{label}: {e}");
            row.status = format!("failed: {e}");
        }
    }
    row
}

#[cfg(feature = "parallel")]
fn run_points(points: &[GridPoint], seed: u64, dir: &Path, format: OutputFormat, workers: Option<usize>) -> Result<Vec<SummaryRow>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", workers.unwrap_or(0))))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|p| run_point(p, seed, dir, format))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn run_points(points: &[GridPoint], seed: u64, dir: &Path, format: OutputFormat, _workers: Option<usize>) -> Result<Vec<SummaryRow>> {
    Ok(points.iter().map(|p| run_point(p, seed, dir, format)).collect())
}

/// Order fits over `h` for every group of points sharing the other axes.
pub fn group_fits(rows: &[SummaryRow]) -> Vec<GroupFit> {
    let mut groups: Vec<&str> = Vec::new();
    for r in rows {
        if !groups.contains(&r.group.as_str()) {
            groups.push(&r.group);
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let members: Vec<&SummaryRow> = rows.iter().filter(|r| r.group == g).collect();
            let result = match members.iter().find(|r| !r.ok()) {
                Some(failed) => Err(Error::Config(format!("grid point {} failed", failed.point))),
                None => {
                    let grid: Vec<f64> = members.iter().map(|r| r.h).collect();
                    let errors: Vec<f64> = members.iter().filter_map(|r| r.asymptotic_error).collect();
                    OrderFit::from_points(&grid, &errors)
                }
            };
            match result {
                Ok(fit) => GroupFit {
                    group: g.to_string(),
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => GroupFit {
                    group: g.to_string(),
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn opt<T: std::fmt::Debug>(v: Option<T>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_else(|| "-".into())
}

pub fn summary_text(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<40} {:<20} {:<50} {:>8} {:>3} {:>12} {:>5} {:>9} {:>8} {:>8} {:>9} {:>8}  {}\n",
        "point", "method", "scheme", "h", "C", "asym_error", "viol", "gradient", "hessian", "grad_tx",
        "projection", "prox", "assumptions"
    );
    for r in rows {
        let err = r
            .asymptotic_error
            .map(|e| format!("{e:.6e}"))
            .unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{:<40} {:<20} {:<50} {:>8} {:>3} {:>12} {:>5} {:>9} {:>8} {:>8} {:>9} {:>8}  {}{}",
            r.point,
            r.method,
            r.scheme,
            r.h,
            r.corrections,
            err,
            opt(r.violations),
            opt(r.gradient),
            opt(r.hessian),
            opt(r.gradient_tx),
            opt(r.projection),
            opt(r.prox),
            r.assumptions,
            if r.ok() { String::new() } else { format!("  [{}]", r.status) }
        )
        .expect("writing to a string");
    }
    out
}

fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every grid point of the spec's sweep. Failed points are recorded in
/// the summary; check [`SweepReport::failures`].
pub fn cmd_sweep(path: &Path, options: &RunOptions) -> Result<SweepReport> {
    let spec = ExperimentSpec::load(path)?;
    if spec.sweep.is_none() {
        return Err(Error::Spec("sweep needs a [sweep] table with at least one axis".into()));
    }
    if options.workers == Some(0) {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let points = spec.expand()?;
    let dir = options.out_dir(&spec);
    fs::create_dir_all(&dir)?;
    let rows = run_points(&points, options.seed(&spec), &dir, options.format(&spec), options.workers)?;

    let fits = spec.sweeps_h().then(|| group_fits(&rows));
    if let Some(fits) = &fits {
        fs::write(dir.join("order_fit.json"), serde_json::to_string_pretty(fits)?)?;
        let single = fits.len() == 1;
        for g in fits {
            let name = if single {
                "error_vs_h.dat".to_string()
            } else {
                format!("error_vs_h_{}.dat", g.group)
            };
            let mut dat = String::from("# h error\n");
            for r in rows.iter().filter(|r| r.group == g.group) {
                if let Some(e) = r.asymptotic_error {
                    writeln!(dat, "{:?} {:?}", r.h, e).expect("writing to a string");
                }
            }
            fs::write(dir.join(name), dat)?;
        }
    }
    fs::write(dir.join("summary.txt"), summary_text(&rows))?;
    write_summary_csv(&dir.join("summary.csv"), &rows)?;
    Ok(SweepReport { dir, rows, fits })
}

/// One line per registered benchmark, sorted by name.
pub fn cmd_list() -> String {
    let mut out = String::new();
    for bp in registry() {
        let p = &bp.instance;
        writeln!(
            out,
            "{:<20} n={} m={} L={} C0={} method={}  {}",
            bp.name,
            p.dimension(),
            p.strong_convexity(),
            p.smoothness(),
            p.rates().c0.map_or_else(|| "-".to_string(), |c| c.to_string()),
            bp.default_method,
            bp.description
        )
        .expect("writing to a string");
    }
    out
}

#[derive(Clone, Debug)]
pub struct ValidateReport {
    pub text: String,
    pub passed: bool,
}

/// Parses the spec, checks every grid point's settings, and checks the
/// problem's oracles against finite differences and its ground truth against
/// the batch solver.
pub fn cmd_validate(path: &Path) -> Result<ValidateReport> {
    let spec = ExperimentSpec::load(path)?;
    let points = spec.expand()?;
    let plan = spec.plan(spec.initial.seed)?;
    let bp = &plan.benchmark;
    let p = &bp.instance;
    let mut text = String::new();
    let mut passed = true;
    writeln!(text, "spec ok: {} grid point(s)", points.len()).expect("writing to a string");

    let times: Vec<f64> = (0..5)
        .map(|i| plan.schedule.time(i * (plan.schedule.len() - 1) / 4))
        .collect();
    let probes: Vec<(Vector, f64)> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let base = bp.optimizer(t).unwrap_or_else(|| Vector::zeros(p.dimension()));
            (base + random_unit(p.dimension(), i as u64), t)
        })
        .collect();
    let report = validate_instance(p, &probes)?;
    for probe in &report.probes {
        writeln!(
            text,
            "probe t={:<10.4} gradient_err={} grad_tx_err={} hessian={} {}",
            probe.t,
            opt(probe.gradient_error),
            opt(probe.gradient_tx_error),
            opt(probe.hessian_eigen_range),
            if probe.passed() { "ok" } else { "FAILED" }
        )
        .expect("writing to a string");
    }
    passed &= report.passed();

    if bp.trajectory.is_some() {
        let mut worst: f64 = 0.0;
        for &t in &times {
            let xs = bp.optimizer(t).expect("trajectory present");
            let batch = solve_batch(p, t, &Vector::zeros(p.dimension()), BATCH_TOLERANCE, BATCH_MAX_ITERATIONS)?;
            worst = worst.max((batch - xs).norm());
        }
        let ok = worst <= 1e-8;
        passed &= ok;
        writeln!(
            text,
            "trajectory vs batch solve: max deviation {worst:e} {}",
            if ok { "ok" } else { "FAILED" }
        )
        .expect("writing to a string");
    }
    Ok(ValidateReport { text, passed })
}
