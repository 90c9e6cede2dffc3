//! Experiment specification files.
//!
//! Specs are TOML documents with one table per concern:
//!
//! ```toml
//! [problem]
//! name = "circle-box"        # registry name, or "quadratic" for a custom instance
//! omega = 1.0                # ω
//! radius = 1.0
//! L = 10.0                   # drift-quadratic only
//! lambda = 0.25              # l1-stream only
//! box_lower = [-0.5, -0.5]   # circle-box only
//! box_upper = [0.5, 0.5]
//!
//! [method]
//! kind = "projected-gradient"   # forward-backward | proximal-point | dual-ascent
//! alpha = 0.5                   # defaults to the rate-optimal step
//! corrections = 1
//!
//! [prediction]                  # omit for a correction-only run
//! mode = "approximate-projected"   # or "closed-form"
//! gamma = 0.0
//! steps = 20
//! beta = 0.5
//!
//! [schedule]
//! t0 = 0.0
//! h = 0.1
//! num_samples = 500             # or `horizon`, giving max(200, ⌈horizon/h⌉) samples
//!
//! [initial]
//! perturbation = 0.1
//! seed = 0
//!
//! [sweep]                       # lists; every combination becomes one run
//! h = [0.2, 0.1, 0.05, 0.025]
//! steps = [1, 2, 5, 10, 20]
//! mode = ["none", "closed-form"]
//!
//! [output]
//! dir = "out/circle-box"
//! format = "both"               # csv | json | both
//! ```
//!
//! A custom quadratic `½xᵀQx + ℓ(t)ᵀx` uses `name = "quadratic"` with
//! `dimension`, `q` (rows), `drift` (one table per coordinate with `offset`,
//! `slope`, `amplitude`, `frequency`, `phase`) and an optional `set` table
//! (`kind = "free" | "box" | "ball" | "affine"`).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::oracle::{custom_quadratic, lookup, BenchmarkParams, BenchmarkProblem};
use crate::pipeline::{samples_for_horizon, RunPlan, DEFAULT_PERTURBATION};
use crate::problem::{Drift, SetDescription};
use crate::running::{InnerSolve, DEFAULT_INNER_MAX_ITERATIONS, DEFAULT_INNER_TOLERANCE};
use crate::{
    Error, Matrix, Method, PredictionConfig, PredictionMode, Result, SamplingSchedule, SolverConfig,
};

pub const CUSTOM_PROBLEM: &str = "quadratic";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub method: MethodSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PredictionSpec>,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_upper: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<Drift>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<SetDescription>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub kind: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "one")]
    pub corrections: usize,
    #[serde(default = "default_inner_tolerance")]
    pub inner_tolerance: f64,
    #[serde(default = "default_inner_max_iterations")]
    pub inner_max_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionSpec {
    pub mode: PredictionMode,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "one")]
    pub steps: usize,
    /// Defaults to `2/(m+L)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub t0: f64,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            perturbation: DEFAULT_PERTURBATION,
            seed: 0,
        }
    }
}

/// Sweep axes. Every combination of the listed values is one grid point.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Vec<SchemeChoice>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrections: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
}

/// A sweep value for `mode`: correction only, or one of the prediction modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    None,
    ClosedForm,
    ApproximateProjected,
}

impl SchemeChoice {
    pub fn name(self) -> &'static str {
        match self {
            SchemeChoice::None => "none",
            SchemeChoice::ClosedForm => "closed-form",
            SchemeChoice::ApproximateProjected => "approximate-projected",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::Config(format!(
                "unknown output format `{other}` (expected csv, json or both)"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Both => "both",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_output_dir")]
    pub dir: String,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
            format: OutputFormat::default(),
        }
    }
}

fn one() -> usize {
    1
}

fn default_inner_tolerance() -> f64 {
    DEFAULT_INNER_TOLERANCE
}

fn default_inner_max_iterations() -> usize {
    DEFAULT_INNER_MAX_ITERATIONS
}

fn default_perturbation() -> f64 {
    DEFAULT_PERTURBATION
}

fn default_output_dir() -> String {
    "out".into()
}

/// One value of one sweep axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisValue {
    Mode(SchemeChoice),
    Corrections(usize),
    Alpha(f64),
    Gamma(f64),
    Steps(usize),
    Beta(f64),
    H(f64),
}

impl AxisValue {
    pub fn axis(&self) -> &'static str {
        match self {
            AxisValue::Mode(_) => "mode",
            AxisValue::Corrections(_) => "C",
            AxisValue::Alpha(_) => "alpha",
            AxisValue::Gamma(_) => "gamma",
            AxisValue::Steps(_) => "P",
            AxisValue::Beta(_) => "beta",
            AxisValue::H(_) => "h",
        }
    }

    pub fn value_string(&self) -> String {
        match self {
            AxisValue::Mode(m) => m.name().into(),
            AxisValue::Corrections(c) | AxisValue::Steps(c) => c.to_string(),
            AxisValue::Alpha(v) | AxisValue::Gamma(v) | AxisValue::Beta(v) | AxisValue::H(v) => {
                format!("{v:?}")
            }
        }
    }

    pub fn label(&self) -> String {
        format!("{}={}", self.axis(), self.value_string())
    }
}

impl ExperimentSpec {
    /// Parses and validates a spec. Parse errors carry line and key.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Spec(msg) => Error::Spec(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Spec(e.to_string()))
    }

    /// Checks everything that can be checked without running: names resolve,
    /// the schedule is valid, sweep axes are nonempty and solver settings are
    /// admissible for the problem.
    pub fn validate(&self) -> Result<()> {
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        if self.schedule.num_samples.is_none() && self.schedule.horizon.is_none() {
            return Err(Error::Spec(
                "schedule needs `num_samples` or `horizon`".into(),
            ));
        }
        if !(self.initial.perturbation >= 0.0) || !self.initial.perturbation.is_finite() {
            return Err(Error::Spec("initial perturbation must be nonnegative".into()));
        }
        if self.output.dir.trim().is_empty() {
            return Err(Error::Spec("output dir must not be empty".into()));
        }
        for point in self.expand()? {
            point.plan(0)?;
        }
        Ok(())
    }

    pub fn benchmark(&self) -> Result<BenchmarkProblem> {
        let p = &self.problem;
        if p.name == CUSTOM_PROBLEM {
            return self.custom_benchmark();
        }
        for (key, present) in [
            ("dimension", p.dimension.is_some()),
            ("q", p.q.is_some()),
            ("drift", p.drift.is_some()),
            ("set", p.set.is_some()),
        ] {
            if present {
                return Err(Error::Spec(format!(
                    "problem key `{key}` only applies to name = \"{CUSTOM_PROBLEM}\""
                )));
            }
        }
        let defaults = BenchmarkParams::default();
        let params = BenchmarkParams {
            omega: p.omega.unwrap_or(defaults.omega),
            radius: p.radius.unwrap_or(defaults.radius),
            smoothness: p.smoothness.unwrap_or(defaults.smoothness),
            l1_weight: p.lambda.unwrap_or(defaults.l1_weight),
            box_lower: p.box_lower.clone().unwrap_or(defaults.box_lower),
            box_upper: p.box_upper.clone().unwrap_or(defaults.box_upper),
        };
        lookup(&p.name, &params)
    }

    fn custom_benchmark(&self) -> Result<BenchmarkProblem> {
        let p = &self.problem;
        let missing = |key: &str| Error::Spec(format!("custom quadratic needs `problem.{key}`"));
        let n = p.dimension.ok_or_else(|| missing("dimension"))?;
        let rows = p.q.as_ref().ok_or_else(|| missing("q"))?;
        if n == 0 || rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Spec(format!("`problem.q` must be {n}×{n}")));
        }
        let q = Matrix::from_fn(n, n, |i, j| rows[i][j]);
        let drift = p.drift.clone().unwrap_or_else(|| vec![Drift::default(); n]);
        if drift.len() != n {
            return Err(Error::Spec(format!("`problem.drift` needs {n} entries")));
        }
        custom_quadratic(q, drift, p.set.as_ref().unwrap_or(&SetDescription::Free))
    }

    pub fn solver_config(&self, bp: &BenchmarkProblem) -> Result<SolverConfig> {
        let m = &self.method;
        let mut config = match m.alpha {
            Some(alpha) => SolverConfig::new(m.kind, alpha, m.corrections),
            None => SolverConfig::with_default_step(m.kind, &bp.instance, m.corrections)?,
        };
        config.inner = InnerSolve {
            tolerance: m.inner_tolerance,
            max_iterations: m.inner_max_iterations,
        };
        Ok(config)
    }

    pub fn prediction_config(&self, bp: &BenchmarkProblem) -> Option<PredictionConfig> {
        self.prediction.as_ref().map(|s| {
            let p = &bp.instance;
            PredictionConfig {
                mode: s.mode,
                gamma: s.gamma,
                steps: s.steps,
                step: s
                    .beta
                    .unwrap_or_else(|| 2.0 / (p.strong_convexity() + p.smoothness())),
            }
        })
    }

    pub fn sampling_schedule(&self) -> Result<SamplingSchedule> {
        let s = &self.schedule;
        let n = match (s.num_samples, s.horizon) {
            (Some(n), _) => n,
            (None, Some(horizon)) => samples_for_horizon(horizon, s.h)?,
            (None, None) => return Err(Error::Spec("schedule needs `num_samples` or `horizon`".into())),
        };
        SamplingSchedule::new(s.t0, s.h, n)
    }

    /// The run described by this spec, ignoring any sweep.
    pub fn plan(&self, seed: u64) -> Result<RunPlan> {
        let bp = self.benchmark()?;
        let solver = self.solver_config(&bp)?;
        solver.validate(&bp.instance)?;
        let prediction = self.prediction_config(&bp);
        if let Some(pc) = &prediction {
            pc.validate(&bp.instance)?;
            if solver.method == Method::DualAscent {
                return Err(Error::Config("prediction is not available for dual ascent".into()));
            }
        }
        let schedule = self.sampling_schedule()?;
        Ok(RunPlan {
            benchmark: bp,
            solver,
            prediction,
            schedule,
            horizon: if self.schedule.num_samples.is_some() {
                None
            } else {
                self.schedule.horizon
            },
            perturbation: self.initial.perturbation,
            seed,
            x0: None,
        })
    }

    /// Copy of the spec with one sweep value applied.
    pub fn with_value(&self, value: AxisValue) -> Result<Self> {
        let mut spec = self.clone();
        spec.sweep = None;
        match value {
            AxisValue::Mode(SchemeChoice::None) => spec.prediction = None,
            AxisValue::Mode(choice) => {
                let mode = match choice {
                    SchemeChoice::ClosedForm => PredictionMode::ClosedForm,
                    _ => PredictionMode::ApproximateProjected,
                };
                let p = spec.prediction.get_or_insert(PredictionSpec {
                    mode,
                    gamma: 0.0,
                    steps: 1,
                    beta: None,
                });
                p.mode = mode;
            }
            AxisValue::Corrections(c) => spec.method.corrections = c,
            AxisValue::Alpha(a) => spec.method.alpha = Some(a),
            AxisValue::H(h) => spec.schedule.h = h,
            AxisValue::Gamma(_) | AxisValue::Steps(_) | AxisValue::Beta(_) => {
                let Some(p) = spec.prediction.as_mut() else {
                    return Err(Error::Spec(format!(
                        "sweep axis `{}` needs a [prediction] table",
                        value.axis()
                    )));
                };
                match value {
                    AxisValue::Gamma(g) => p.gamma = g,
                    AxisValue::Steps(s) => p.steps = s,
                    AxisValue::Beta(b) => p.beta = Some(b),
                    _ => unreachable!(),
                }
            }
        }
        Ok(spec)
    }

    /// All grid points of the sweep, in a fixed order with `h` varying
    /// fastest. A spec without sweep has a single unlabeled point.
    pub fn expand(&self) -> Result<Vec<GridPoint>> {
        let axes = self.sweep.as_ref().map(SweepSpec::axes).unwrap_or_default();
        let mut points = vec![GridPoint {
            values: Vec::new(),
            spec: Self {
                sweep: None,
                ..self.clone()
            },
        }];
        for axis in axes {
            let mut next = Vec::with_capacity(points.len() * axis.len());
            for point in &points {
                for value in &axis {
                    let mut values = point.values.clone();
                    values.push(*value);
                    next.push(GridPoint {
                        spec: point.spec.with_value(*value)?,
                        values,
                    });
                }
            }
            points = next;
        }
        Ok(points)
    }

    pub fn sweeps_h(&self) -> bool {
        self.sweep.as_ref().is_some_and(|s| s.h.is_some())
    }
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        let lens = [
            ("mode", self.mode.as_ref().map(Vec::len)),
            ("corrections", self.corrections.as_ref().map(Vec::len)),
            ("alpha", self.alpha.as_ref().map(Vec::len)),
            ("gamma", self.gamma.as_ref().map(Vec::len)),
            ("steps", self.steps.as_ref().map(Vec::len)),
            ("beta", self.beta.as_ref().map(Vec::len)),
            ("h", self.h.as_ref().map(Vec::len)),
        ];
        if lens.iter().all(|(_, l)| l.is_none()) {
            return Err(Error::Spec("[sweep] needs at least one axis".into()));
        }
        if let Some((name, _)) = lens.iter().find(|(_, l)| *l == Some(0)) {
            return Err(Error::Spec(format!("sweep axis `{name}` is empty")));
        }
        Ok(())
    }

    /// Axes in expansion order.
    pub fn axes(&self) -> Vec<Vec<AxisValue>> {
        fn axis<T: Copy>(v: &Option<Vec<T>>, f: fn(T) -> AxisValue) -> Option<Vec<AxisValue>> {
            v.as_ref().map(|v| v.iter().map(|x| f(*x)).collect())
        }
        [
            axis(&self.mode, AxisValue::Mode),
            axis(&self.corrections, AxisValue::Corrections),
            axis(&self.alpha, AxisValue::Alpha),
            axis(&self.gamma, AxisValue::Gamma),
            axis(&self.steps, AxisValue::Steps),
            axis(&self.beta, AxisValue::Beta),
            axis(&self.h, AxisValue::H),
        ]
        .into_iter()
        .flatten()
        .collect()
    }
}

/// One point of a sweep grid: the axis values and the resulting spec.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub values: Vec<AxisValue>,
    pub spec: ExperimentSpec,
}

impl GridPoint {
    /// Directory-safe label such as `P=5_h=0.1`, or `run` without axes.
    pub fn label(&self) -> String {
        if self.values.is_empty() {
            return "run".into();
        }
        self.values
            .iter()
            .map(AxisValue::label)
            .collect::<Vec<_>>()
            .join("_")
    }

    /// Label of every axis except `h`, used to group points for order fits.
    pub fn group_label(&self) -> String {
        let parts: Vec<String> = self
            .values
            .iter()
            .filter(|v| !matches!(v, AxisValue::H(_)))
            .map(AxisValue::label)
            .collect();
        if parts.is_empty() {
            "all".into()
        } else {
            parts.join("_")
        }
    }

    pub fn h(&self) -> f64 {
        self.spec.schedule.h
    }

    pub fn plan(&self, seed: u64) -> Result<RunPlan> {
        self.spec.plan(seed).map_err(|e| match e {
            e @ Error::Spec(_) => e,
            e if self.values.is_empty() => e,
            e => Error::AtGridPoint {
                label: self.label(),
                source: Box::new(e),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRCLE: &str = r#"
[problem]
name = "circle"
omega = 1.0

[method]
kind = "projected-gradient"
alpha = 0.5
corrections = 1

[schedule]
h = 0.1
num_samples = 300
"#;

    #[test]
    fn minimal_spec_parses_with_defaults() {
        let spec = ExperimentSpec::from_toml_str(CIRCLE).unwrap();
        assert_eq!(spec.schedule.t0, 0.0);
        assert_eq!(spec.initial.perturbation, 0.1);
        assert_eq!(spec.output.format, OutputFormat::Both);
        let plan = spec.plan(3).unwrap();
        assert_eq!(plan.schedule.len(), 300);
        assert_eq!(plan.solver.step, 0.5);
        assert!(plan.prediction.is_none());
    }

    #[test]
    fn missing_h_names_the_key() {
        let text = CIRCLE.replace("h = 0.1\n", "");
        let err = ExperimentSpec::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("`h`"), "{err}");
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let text = CIRCLE.replace("alpha = 0.5", "alpha = \"fast\"");
        let err = ExperimentSpec::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("line 8"), "{err}");
        assert!(err.contains("alpha"), "{err}");
    }

    #[test]
    fn stepsize_guard_cites_the_bound() {
        let text = CIRCLE.replace("alpha = 0.5", "alpha = 3.0");
        let err = ExperimentSpec::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("2/L"), "{err}");
    }

    #[test]
    fn unknown_problem_is_rejected() {
        let text = CIRCLE.replace("\"circle\"", "\"spiral\"");
        assert!(matches!(
            ExperimentSpec::from_toml_str(&text),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn empty_sweep_axis_is_rejected() {
        let text = format!("{CIRCLE}\n[sweep]\nh = []\n");
        let err = ExperimentSpec::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("empty"), "{err}");
        let text = format!("{CIRCLE}\n[sweep]\n");
        assert!(ExperimentSpec::from_toml_str(&text).is_err());
    }

    #[test]
    fn sweep_expands_with_h_fastest() {
        let text = format!(
            "{CIRCLE}\n[prediction]\nmode = \"approximate-projected\"\nbeta = 0.5\n\n[sweep]\nsteps = [1, 5]\nh = [0.2, 0.1]\n"
        );
        let spec = ExperimentSpec::from_toml_str(&text).unwrap();
        let labels: Vec<String> = spec.expand().unwrap().iter().map(GridPoint::label).collect();
        assert_eq!(labels, ["P=1_h=0.2", "P=1_h=0.1", "P=5_h=0.2", "P=5_h=0.1"]);
        let points = spec.expand().unwrap();
        assert_eq!(points[2].group_label(), "P=5");
        assert_eq!(points[2].spec.prediction.as_ref().unwrap().steps, 5);
        assert_eq!(points[3].h(), 0.1);
    }

    #[test]
    fn prediction_axis_without_table_is_rejected() {
        let text = format!("{CIRCLE}\n[sweep]\nsteps = [1, 5]\n");
        assert!(ExperimentSpec::from_toml_str(&text).is_err());
    }

    #[test]
    fn round_trip_is_field_identical() {
        let text = format!(
            "{CIRCLE}\n[prediction]\nmode = \"closed-form\"\ngamma = 0.5\n\n[sweep]\nmode = [\"none\", \"closed-form\"]\nh = [0.2, 0.1, 0.05, 0.025]\n\n[output]\ndir = \"x\"\nformat = \"csv\"\n"
        );
        let spec = ExperimentSpec::from_toml_str(&text).unwrap();
        let again = ExperimentSpec::from_toml_str(&spec.to_toml().unwrap()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn custom_quadratic_spec() {
        let text = r#"
[problem]
name = "quadratic"
dimension = 2
q = [[2.0, 0.0], [0.0, 4.0]]
drift = [{ amplitude = 1.0, frequency = 1.0 }, { slope = 0.5 }]
set = { kind = "box", lower = [-1.0, -1.0], upper = [1.0, 1.0] }

[method]
kind = "projected-gradient"

[schedule]
h = 0.1
horizon = 10.0
"#;
        let spec = ExperimentSpec::from_toml_str(text).unwrap();
        let plan = spec.plan(0).unwrap();
        assert_eq!(plan.benchmark.instance.strong_convexity(), 2.0);
        assert_eq!(plan.benchmark.instance.smoothness(), 4.0);
        assert!((plan.solver.step - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(plan.schedule.len(), 200);
        assert!(plan.benchmark.trajectory.is_none());
        let again = ExperimentSpec::from_toml_str(&spec.to_toml().unwrap()).unwrap();
        assert_eq!(spec, again);
    }
}
