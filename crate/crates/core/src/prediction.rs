//! Prediction-correction tracking.
//!
//! Before sample `t_{k+1}` arrives, the optimizer is extrapolated from data at
//! `t_k` by a first-order expansion of the optimality condition around `x_k`:
//!
//! ```text
//! ∇f(x_k; t_k) + h ∇tx f(x_k; t_k) + ∇xx f(x_k; t_k) (y − x_k) + N_X(y) ∋ 0
//! ```
//!
//! On unconstrained problems this is a linear solve (with the `γ` family
//! trading a tangential update, `γ = 1`, for a Newton-like one, `γ = 0`). On
//! constrained problems it is the quadratic program
//! `min_{y ∈ X} ½ yᵀ Q_k y + qᵀ y`, approximated by `P` projected-gradient
//! steps. The prediction is then refined by `C` correction steps on the new
//! sample.

use nalgebra::linalg::Cholesky;
use serde::{Deserialize, Serialize};

use crate::running::{correct, initial_point, make_row, EvalCounts, Method, SolverConfig};
use crate::record::{RecordMeta, TrajectoryRecord};
use crate::{ConvexSet, Error, Matrix, ProblemInstance, Result, SamplingSchedule, Vector, DIVERGENCE_NORM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionMode {
    ClosedForm,
    ApproximateProjected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionConfig {
    pub mode: PredictionMode,
    /// `γ ∈ [0, 1]`; only used in closed form.
    pub gamma: f64,
    /// Prediction step count `P`.
    pub steps: usize,
    /// Prediction stepsize `β`.
    pub step: f64,
}

impl PredictionConfig {
    pub fn closed_form(gamma: f64) -> Self {
        Self {
            mode: PredictionMode::ClosedForm,
            gamma,
            steps: 1,
            step: 1.0,
        }
    }

    pub fn approximate(steps: usize, step: f64) -> Self {
        Self {
            mode: PredictionMode::ApproximateProjected,
            gamma: 0.0,
            steps,
            step,
        }
    }

    /// Checks the configuration against `p`; returns warnings for settings
    /// that are accepted but have no effect.
    pub fn validate(&self, p: &ProblemInstance) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("γ must lie in [0, 1], got {}", self.gamma)));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidStepsize(format!(
                "prediction stepsize β must be positive, got {}",
                self.step
            )));
        }
        if self.mode == PredictionMode::ApproximateProjected {
            let bound = 2.0 / p.smoothness();
            if self.step >= bound {
                return Err(Error::InvalidStepsize(format!(
                    "β = {} violates β < 2/L = {bound}",
                    self.step
                )));
            }
            if self.steps == 0 {
                return Err(Error::Config("prediction step count P must be at least 1".into()));
            }
            if self.gamma != 0.0 {
                warnings.push(format!(
                    "γ = {} is ignored by approximate projected prediction",
                    self.gamma
                ));
            }
        }
        Ok(warnings)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftSource {
    Analytic,
    /// `(∇f(x; t_k) − ∇f(x; t_k − h)) / h`
    BackwardDifference,
}

impl DriftSource {
    pub fn name(self) -> &'static str {
        match self {
            DriftSource::Analytic => "analytic",
            DriftSource::BackwardDifference => "backward-difference",
        }
    }
}

/// `½ yᵀ Q y + qᵀ y`, the local model of the next sample's problem.
///
/// `drift` keeps `c_k = h ∇tx f(x_k; t_k)` on its own; when the model is built
/// around an iterate, `q = c_k + ∇f(x_k; t_k) − Q_k x_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticModel {
    pub hessian: Matrix,
    pub drift: Vector,
    pub linear: Vector,
    pub source: DriftSource,
}

impl QuadraticModel {
    /// A bare model `½ yᵀ Q y + cᵀ y`.
    pub fn new(hessian: Matrix, drift: Vector) -> Result<Self> {
        let n = hessian.nrows();
        if hessian.ncols() != n || drift.len() != n {
            return Err(Error::InvalidInput("model dimensions do not agree".into()));
        }
        Ok(Self {
            hessian,
            linear: drift.clone(),
            drift,
            source: DriftSource::Analytic,
        })
    }

    pub fn gradient(&self, y: &Vector) -> Vector {
        &self.hessian * y + &self.linear
    }

    pub fn value(&self, y: &Vector) -> f64 {
        0.5 * y.dot(&(&self.hessian * y)) + self.linear.dot(y)
    }
}

/// `h ∇tx f(x; t)`, from the oracle or a backward difference over one period.
fn drift_term(
    p: &ProblemInstance,
    x: &Vector,
    t: f64,
    h: f64,
    counts: &mut EvalCounts,
) -> (Vector, DriftSource) {
    if let Some(d) = p.cost().gradient_time_derivative(x, t) {
        counts.gradient_tx += 1;
        return (d * h, DriftSource::Analytic);
    }
    if h == 0.0 {
        return (Vector::zeros(x.len()), DriftSource::BackwardDifference);
    }
    counts.gradient += 2;
    let d = p.cost().gradient(x, t) - p.cost().gradient(x, t - h);
    (d, DriftSource::BackwardDifference)
}

fn hessian_at(p: &ProblemInstance, x: &Vector, t: f64, counts: &mut EvalCounts) -> Result<Matrix> {
    let q = p
        .cost()
        .hessian(x, t)
        .ok_or_else(|| Error::Config("prediction needs a Hessian oracle".into()))?;
    counts.hessian += 1;
    Ok(q)
}

/// Builds `(Q_k, c_k)` at `(x_k, t_k)` with sampling period `h`.
pub fn build_quadratic_model(
    p: &ProblemInstance,
    x: &Vector,
    t: f64,
    h: f64,
    counts: &mut EvalCounts,
) -> Result<QuadraticModel> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("sampling period must be >= 0, got {h}")));
    }
    let hessian = hessian_at(p, x, t, counts)?;
    let (drift, source) = drift_term(p, x, t, h, counts);
    let g = p.cost().gradient(x, t);
    counts.gradient += 1;
    let linear = &drift + g - &hessian * x;
    Ok(QuadraticModel {
        hessian,
        drift,
        linear,
        source,
    })
}

fn factor_hessian(q: &Matrix) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let scale = q.norm();
    let chol = Cholesky::new(q.clone())
        .ok_or_else(|| Error::SingularHessian("Hessian is not positive definite".into()))?;
    let pivot = chol.l_dirty().diagonal().map(|d| d * d).min();
    if !(pivot > 1e-12 * scale) {
        return Err(Error::SingularHessian(format!(
            "smallest pivot {pivot:e} below 1e-12·‖Q‖"
        )));
    }
    Ok(chol)
}

/// `x_k − [∇xx f]⁻¹ (h ∇tx f + (1 − γ) ∇f)`, all evaluated at `(x_k, t_k)`.
pub fn predict_closed_form(
    p: &ProblemInstance,
    x: &Vector,
    t: f64,
    h: f64,
    gamma: f64,
    counts: &mut EvalCounts,
) -> Result<Vector> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("γ must lie in [0, 1], got {gamma}")));
    }
    let q = hessian_at(p, x, t, counts)?;
    let (drift, _) = drift_term(p, x, t, h, counts);
    let g = p.cost().gradient(x, t);
    counts.gradient += 1;
    let rhs = -(drift + g * (1.0 - gamma));
    let delta = factor_hessian(&q)?.solve(&rhs);
    Ok(x + delta)
}

/// `P` projected-gradient steps on the model over `set`, from `y0`.
pub fn predict_approximate(
    model: &QuadraticModel,
    set: &ConvexSet,
    y0: &Vector,
    step: f64,
    steps: usize,
    counts: &mut EvalCounts,
) -> Result<Vector> {
    if !(step > 0.0) {
        return Err(Error::InvalidStepsize(format!("β must be positive, got {step}")));
    }
    if steps == 0 {
        return Err(Error::Config("prediction step count P must be at least 1".into()));
    }
    let mut y = y0.clone();
    for i in 0..steps {
        y = set.project(&(&y - model.gradient(&y) * step))?;
        counts.projection += 1;
        let norm = y.norm();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::Divergence {
                iteration: i + 1,
                norm,
            });
        }
    }
    Ok(y)
}

/// Runs prediction-correction over the whole schedule.
///
/// The prediction at `t_k` uses the feasible set sampled at `t_k`. Closed-form
/// prediction applies only while that set is free space; otherwise the
/// approximate scheme is used with the configured `P` and `β`.
pub fn run_prediction_correction(
    p: &ProblemInstance,
    schedule: &SamplingSchedule,
    solver: &SolverConfig,
    prediction: &PredictionConfig,
    x0: &Vector,
) -> Result<TrajectoryRecord> {
    solver.validate(p)?;
    if solver.method == Method::DualAscent {
        return Err(Error::Config(
            "prediction is not available for dual ascent".into(),
        ));
    }
    let mut warnings = prediction.validate(p)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let h = schedule.period();
    let mut counts = EvalCounts::default();
    let t0 = schedule.start();
    let mut x = initial_point(p, x0, t0).map_err(|e| e.at_sample(0))?;

    let mut record = TrajectoryRecord::new(RecordMeta {
        method: solver.method.name().into(),
        prediction_correction: true,
        dimension: p.dimension(),
        step: solver.step,
        corrections: solver.corrections,
        ..Default::default()
    });
    record.push(make_row(p, 0, t0, &x, None, None, solver.step)?);

    let mut source = None;
    let mut fell_back = false;
    for k in 1..schedule.len() {
        let t_prev = schedule.time(k - 1);
        let t = schedule.time(k);
        let mut step = || -> Result<(Vector, Vector)> {
            let set = p.feasible_set(t_prev);
            let predicted = if prediction.mode == PredictionMode::ClosedForm && set.is_free() {
                if source.is_none() {
                    source = Some(if p.cost().gradient_time_derivative(&x, t_prev).is_some() {
                        DriftSource::Analytic
                    } else {
                        DriftSource::BackwardDifference
                    });
                }
                predict_closed_form(p, &x, t_prev, h, prediction.gamma, &mut counts)?
            } else {
                if prediction.mode == PredictionMode::ClosedForm && !fell_back {
                    fell_back = true;
                    let w = format!(
                        "closed-form prediction needs an unconstrained set; using {} projected steps at sample {k}",
                        prediction.steps
                    );
                    log::warn!("{w}");
                    warnings.push(w);
                }
                let model = build_quadratic_model(p, &x, t_prev, h, &mut counts)?;
                source.get_or_insert(model.source);
                predict_approximate(&model, &set, &x, prediction.step, prediction.steps, &mut counts)?
            };
            let (next, _) = correct(p, solver, &predicted, None, t, &mut counts)?;
            Ok((predicted, next))
        };
        let (predicted, next) = step().map_err(|e| e.at_sample(k))?;
        x = next;
        record.push(
            make_row(p, k, t, &x, Some(&predicted), None, solver.step).map_err(|e| e.at_sample(k))?,
        );
    }
    record.meta.counts = counts;
    record.meta.drift_source = source.map(|s| s.name().to_string());
    record.meta.warnings = warnings;
    Ok(record)
}
