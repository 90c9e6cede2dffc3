//! Correction-only ("running") tracking.
//!
//! At every sample time the solver warm-starts from the previous iterate and
//! applies `C` iterations of a static method to the newly sampled problem:
//!
//! ```text
//! y_0 = x_k
//! y_{i+1} = M_{t_{k+1}}(y_i),  i = 0..C
//! x_{k+1} = y_C
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::contraction_rate;
use crate::problem::AffineSubspace;
use crate::record::{RecordMeta, TrajectoryRecord, TrajectoryRow};
use crate::{
    CompositeTerm, ConvexSet, Error, Matrix, ProblemInstance, Result, SamplingSchedule, Vector,
    DIVERGENCE_NORM,
};

pub const DEFAULT_INNER_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_INNER_MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ProjectedGradient,
    ProximalPoint,
    ForwardBackward,
    DualAscent,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::ProjectedGradient,
        Method::ProximalPoint,
        Method::ForwardBackward,
        Method::DualAscent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ProjectedGradient => "projected-gradient",
            Method::ProximalPoint => "proximal-point",
            Method::ForwardBackward => "forward-backward",
            Method::DualAscent => "dual-ascent",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Oracle evaluation counts, for equal-compute comparisons.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub gradient: u64,
    pub hessian: u64,
    pub gradient_tx: u64,
    pub projection: u64,
    pub prox: u64,
    pub inner_iterations: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerSolve {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for InnerSolve {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_INNER_TOLERANCE,
            max_iterations: DEFAULT_INNER_MAX_ITERATIONS,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub method: Method,
    /// Correction stepsize `α`.
    pub step: f64,
    /// Correction count `C`.
    pub corrections: usize,
    /// `(A, b)` for dual ascent; defaults to the problem's affine feasible set.
    pub equality: Option<(Matrix, Vector)>,
    pub inner: InnerSolve,
}

impl SolverConfig {
    pub fn new(method: Method, step: f64, corrections: usize) -> Self {
        Self {
            method,
            step,
            corrections,
            equality: None,
            inner: InnerSolve::default(),
        }
    }

    /// Uses the stepsize that minimizes the method's contraction factor:
    /// `2/(m+L)` on the primal, or on the dual for dual ascent.
    pub fn with_default_step(method: Method, p: &ProblemInstance, corrections: usize) -> Result<Self> {
        let mut config = Self::new(method, 1.0, corrections);
        config.step = match method {
            Method::DualAscent => {
                let (lo, hi) = dual_curvature(p, &config.constraint(p, 0.0)?);
                2.0 / (lo + hi)
            }
            _ => 2.0 / (p.strong_convexity() + p.smoothness()),
        };
        Ok(config)
    }

    pub fn validate(&self, p: &ProblemInstance) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidStepsize(format!(
                "stepsize α must be positive, got {}",
                self.step
            )));
        }
        if self.corrections == 0 {
            return Err(Error::Config("correction count C must be at least 1".into()));
        }
        if !(self.inner.tolerance > 0.0) || self.inner.max_iterations == 0 {
            return Err(Error::Config("inner solve tolerance and cap must be positive".into()));
        }
        match self.method {
            Method::ProjectedGradient | Method::ForwardBackward => {
                let bound = 2.0 / p.smoothness();
                if self.step >= bound {
                    return Err(Error::InvalidStepsize(format!(
                        "α = {} violates α < 2/L = {bound}",
                        self.step
                    )));
                }
                if self.method == Method::ProjectedGradient && !p.composite().is_none() {
                    return Err(Error::Config(
                        "problem has a composite term; use forward-backward".into(),
                    ));
                }
            }
            Method::ProximalPoint => {
                if !p.composite().is_none() {
                    return Err(Error::Config(
                        "proximal point does not support a composite term".into(),
                    ));
                }
            }
            Method::DualAscent => {
                if !(p.strong_convexity() > 0.0) {
                    return Err(Error::Config("dual ascent needs m > 0".into()));
                }
                let (_, hi) = dual_curvature(p, &self.constraint(p, 0.0)?);
                let bound = 2.0 / hi;
                if self.step >= bound {
                    return Err(Error::InvalidStepsize(format!(
                        "dual step α = {} violates α < 2m/σ_max(A)² = {bound}",
                        self.step
                    )));
                }
            }
        }
        Ok(())
    }

    /// Equality constraint used by dual ascent at time `t`.
    pub fn constraint(&self, p: &ProblemInstance, t: f64) -> Result<AffineSubspace> {
        if let Some((a, b)) = &self.equality {
            if a.ncols() != p.dimension() {
                return Err(Error::InvalidInput(format!(
                    "equality matrix has {} columns, problem dimension is {}",
                    a.ncols(),
                    p.dimension()
                )));
            }
            return AffineSubspace::new(a.clone(), b.clone());
        }
        match p.feasible_set(t) {
            ConvexSet::Affine(s) => Ok(s),
            _ => Err(Error::Config(
                "dual ascent needs an equality constraint or an affine feasible set".into(),
            )),
        }
    }

    /// Stepsize used for the fixed-point residual: `α` for primal methods,
    /// `1/L` for dual ascent, whose `α` acts on the multiplier.
    pub fn residual_step(&self, p: &ProblemInstance) -> f64 {
        match self.method {
            Method::DualAscent => 1.0 / p.smoothness(),
            _ => self.step,
        }
    }

    /// Per-iteration contraction factor guaranteed by theory, if any.
    ///
    /// Projected gradient and forward-backward: `max{|1−αm|, |1−αL|}`.
    /// Proximal point: `1/(1+αm)`. Dual ascent: the gradient rate on the dual,
    /// whose curvature lies in `[σ_min(A)²/L, σ_max(A)²/m]`; the bound is on
    /// the multiplier error.
    pub fn theoretical_rate(&self, p: &ProblemInstance) -> Option<f64> {
        let (m, l) = (p.strong_convexity(), p.smoothness());
        match self.method {
            Method::ProjectedGradient | Method::ForwardBackward => {
                contraction_rate(m, l, self.step).ok()
            }
            Method::ProximalPoint => (m > 0.0).then(|| 1.0 / (1.0 + self.step * m)),
            Method::DualAscent => {
                let s = self.constraint(p, 0.0).ok()?;
                let (lo, hi) = dual_curvature(p, &s);
                contraction_rate(lo, hi, self.step).ok()
            }
        }
    }
}

/// Curvature bounds `(σ_min²/L, σ_max²/m)` of the negated dual function.
pub fn dual_curvature(p: &ProblemInstance, s: &AffineSubspace) -> (f64, f64) {
    let sv = s.matrix().clone().svd(false, false).singular_values;
    let (smin, smax) = (sv.min(), sv.max());
    (smin * smin / p.smoothness(), smax * smax / p.strong_convexity())
}

fn check_iterate(iteration: usize, v: &Vector) -> Result<()> {
    let norm = v.norm();
    if !norm.is_finite() || norm > DIVERGENCE_NORM {
        return Err(Error::Divergence { iteration, norm });
    }
    Ok(())
}

/// `C` projected-gradient steps `y ← Π_X[y − α ∇f(y; t)]` on the set sampled at `t`.
pub fn projected_gradient_pass(
    p: &ProblemInstance,
    y0: &Vector,
    t: f64,
    step: f64,
    corrections: usize,
    counts: &mut EvalCounts,
) -> Result<Vector> {
    let set = p.feasible_set(t);
    let mut y = y0.clone();
    for i in 0..corrections {
        let g = p.cost().gradient(&y, t);
        counts.gradient += 1;
        y = set.project(&(&y - g * step))?;
        counts.projection += 1;
        check_iterate(i + 1, &y)?;
    }
    Ok(y)
}

/// `C` forward-backward steps `y ← prox_{αg}(y − α ∇f(y; t))`.
pub fn forward_backward_pass(
    p: &ProblemInstance,
    g: &CompositeTerm,
    y0: &Vector,
    t: f64,
    step: f64,
    corrections: usize,
    counts: &mut EvalCounts,
) -> Result<Vector> {
    let mut y = y0.clone();
    for i in 0..corrections {
        let grad = p.cost().gradient(&y, t);
        counts.gradient += 1;
        y = g.prox(&(&y - grad * step), step)?;
        counts.prox += 1;
        check_iterate(i + 1, &y)?;
    }
    Ok(y)
}

/// `C` proximal-point steps `y ← argmin_{x ∈ X} f(x; t) + ‖x − y‖²/(2α)`.
///
/// Uses the cost's closed form on unconstrained problems, otherwise an inner
/// projected-gradient loop run to `inner.tolerance` on the gradient mapping.
pub fn proximal_point_pass(
    p: &ProblemInstance,
    y0: &Vector,
    t: f64,
    step: f64,
    corrections: usize,
    inner: &InnerSolve,
    counts: &mut EvalCounts,
) -> Result<Vector> {
    let set = p.feasible_set(t);
    let mut y = y0.clone();
    for i in 0..corrections {
        let closed = if set.is_free() {
            p.cost().proximal_step(&y, step, t)
        } else {
            None
        };
        y = match closed {
            Some(next) => {
                counts.prox += 1;
                next
            }
            None => prox_inner_loop(p, &set, &y, t, step, inner, counts)?,
        };
        check_iterate(i + 1, &y)?;
    }
    Ok(y)
}

fn prox_inner_loop(
    p: &ProblemInstance,
    set: &ConvexSet,
    anchor: &Vector,
    t: f64,
    step: f64,
    inner: &InnerSolve,
    counts: &mut EvalCounts,
) -> Result<Vector> {
    let m = p.strong_convexity() + 1.0 / step;
    let l = p.smoothness() + 1.0 / step;
    let s = 2.0 / (m + l);
    let mut x = set.project(anchor)?;
    counts.projection += 1;
    let mut residual = f64::INFINITY;
    for it in 0..inner.max_iterations {
        let g = p.cost().gradient(&x, t) + (&x - anchor) / step;
        counts.gradient += 1;
        let next = set.project(&(&x - g * s))?;
        counts.projection += 1;
        counts.inner_iterations += 1;
        residual = (&next - &x).norm() / s;
        check_iterate(it + 1, &next)?;
        x = next;
        if residual <= inner.tolerance {
            return Ok(x);
        }
    }
    Err(Error::InexactInnerSolve {
        iterations: inner.max_iterations,
        residual,
    })
}

/// `argmin_x f(x; t) + λᵀ(Ax − b)`, closed form when the cost provides one.
pub fn lagrangian_argmin(
    p: &ProblemInstance,
    constraint: &AffineSubspace,
    lambda: &Vector,
    warm: &Vector,
    t: f64,
    inner: &InnerSolve,
    counts: &mut EvalCounts,
) -> Result<Vector> {
    let a = constraint.matrix();
    if let Some(x) = p.cost().lagrangian_minimizer(a, lambda, t) {
        counts.prox += 1;
        return Ok(x);
    }
    let s = 2.0 / (p.strong_convexity() + p.smoothness());
    let shift = a.transpose() * lambda;
    let mut x = warm.clone();
    let mut residual = f64::INFINITY;
    for it in 0..inner.max_iterations {
        let g = p.cost().gradient(&x, t) + &shift;
        counts.gradient += 1;
        counts.inner_iterations += 1;
        residual = g.norm();
        if residual <= inner.tolerance {
            return Ok(x);
        }
        x -= g * s;
        check_iterate(it + 1, &x)?;
    }
    Err(Error::InexactInnerSolve {
        iterations: inner.max_iterations,
        residual,
    })
}

/// `C` dual-ascent rounds `x ← argmin L(·, λ); λ ← λ + α(Ax − b)`.
///
/// The returned primal point is the Lagrangian minimizer at the returned
/// multiplier.
#[allow(clippy::too_many_arguments)]
pub fn dual_ascent_pass(
    p: &ProblemInstance,
    x0: &Vector,
    lambda0: &Vector,
    t: f64,
    step: f64,
    corrections: usize,
    constraint: &AffineSubspace,
    inner: &InnerSolve,
    counts: &mut EvalCounts,
) -> Result<(Vector, Vector)> {
    if lambda0.len() != constraint.rhs().len() {
        return Err(Error::InvalidInput(format!(
            "multiplier has length {}, constraint has {} rows",
            lambda0.len(),
            constraint.rhs().len()
        )));
    }
    let mut lambda = lambda0.clone();
    let mut x = x0.clone();
    for i in 0..corrections {
        x = lagrangian_argmin(p, constraint, &lambda, &x, t, inner, counts)?;
        lambda += constraint.residual(&x) * step;
        check_iterate(i + 1, &lambda)?;
    }
    x = lagrangian_argmin(p, constraint, &lambda, &x, t, inner, counts)?;
    check_iterate(corrections, &x)?;
    Ok((x, lambda))
}

/// One sample's correction from `start` at time `t` with the configured method.
pub(crate) fn correct(
    p: &ProblemInstance,
    config: &SolverConfig,
    start: &Vector,
    lambda: Option<&Vector>,
    t: f64,
    counts: &mut EvalCounts,
) -> Result<(Vector, Option<Vector>)> {
    let (alpha, c) = (config.step, config.corrections);
    Ok(match config.method {
        Method::ProjectedGradient => (projected_gradient_pass(p, start, t, alpha, c, counts)?, None),
        Method::ForwardBackward => (
            forward_backward_pass(p, p.composite(), start, t, alpha, c, counts)?,
            None,
        ),
        Method::ProximalPoint => (
            proximal_point_pass(p, start, t, alpha, c, &config.inner, counts)?,
            None,
        ),
        Method::DualAscent => {
            let constraint = config.constraint(p, t)?;
            let lambda = lambda
                .cloned()
                .unwrap_or_else(|| Vector::zeros(constraint.rhs().len()));
            let (x, l) =
                dual_ascent_pass(p, start, &lambda, t, alpha, c, &constraint, &config.inner, counts)?;
            (x, Some(l))
        }
    })
}

pub(crate) fn make_row(
    p: &ProblemInstance,
    k: usize,
    t: f64,
    x: &Vector,
    prediction: Option<&Vector>,
    dual: Option<&Vector>,
    step: f64,
) -> Result<TrajectoryRow> {
    Ok(TrajectoryRow {
        k,
        t,
        x: x.iter().copied().collect(),
        prediction: prediction.map(|v| v.iter().copied().collect()),
        xstar: None,
        tracking_error: None,
        prediction_error: None,
        fixed_point_residual: p.fixed_point_residual(x, t, step)?,
        cost: p.objective(x, t),
        dual: dual.map(|v| v.iter().copied().collect()),
    })
}

/// Projects `x0` onto `X(t0)` after checking it.
pub(crate) fn initial_point(p: &ProblemInstance, x0: &Vector, t0: f64) -> Result<Vector> {
    if x0.len() != p.dimension() {
        return Err(Error::InvalidInput(format!(
            "initial point has dimension {}, problem has {}",
            x0.len(),
            p.dimension()
        )));
    }
    p.feasible_set(t0).project(x0)
}

/// Runs the correction-only method over the whole schedule.
pub fn run_tracking(
    p: &ProblemInstance,
    schedule: &SamplingSchedule,
    config: &SolverConfig,
    x0: &Vector,
) -> Result<TrajectoryRecord> {
    config.validate(p)?;
    let mut record = TrajectoryRecord::new(RecordMeta {
        method: config.method.name().into(),
        prediction_correction: false,
        dimension: p.dimension(),
        step: config.step,
        corrections: config.corrections,
        ..Default::default()
    });
    let mut counts = EvalCounts::default();
    let t0 = schedule.start();
    let mut x = initial_point(p, x0, t0).map_err(|e| e.at_sample(0))?;
    let mut lambda = match config.method {
        Method::DualAscent => Some(Vector::zeros(config.constraint(p, t0)?.rhs().len())),
        _ => None,
    };
    let residual_step = config.residual_step(p);
    record.push(make_row(p, 0, t0, &x, None, lambda.as_ref(), residual_step)?);
    for k in 1..schedule.len() {
        let t = schedule.time(k);
        let (next, next_lambda) =
            correct(p, config, &x, lambda.as_ref(), t, &mut counts).map_err(|e| e.at_sample(k))?;
        x = next;
        lambda = next_lambda;
        record.push(
            make_row(p, k, t, &x, None, lambda.as_ref(), residual_step)
                .map_err(|e| e.at_sample(k))?,
        );
    }
    record.meta.counts = counts;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Drift, FnCost, QuadraticCost};
    use approx::assert_abs_diff_eq;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    /// `½ (x − c)²` in one dimension.
    fn shifted(c: f64) -> ProblemInstance {
        let f = QuadraticCost::new(Matrix::identity(1, 1), vec![Drift::constant(-c)]).unwrap();
        ProblemInstance::new(f, 1.0, 1.0).unwrap()
    }

    fn counts() -> EvalCounts {
        EvalCounts::default()
    }

    #[test]
    fn projected_gradient_hand_iterates() {
        let p = shifted(1.0);
        let y = projected_gradient_pass(&p, &v(&[0.0]), 0.0, 0.5, 2, &mut counts()).unwrap();
        assert_abs_diff_eq!(y[0], 0.75, epsilon = 1e-15);

        let boxed = shifted(1.0)
            .with_set(ConvexSet::boxed(v(&[0.0]), v(&[0.4])).unwrap())
            .unwrap();
        let y = projected_gradient_pass(&boxed, &v(&[0.0]), 0.0, 1.0, 1, &mut counts()).unwrap();
        assert_abs_diff_eq!(y[0], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn minimizer_is_a_fixed_point_of_every_pass() {
        let p = shifted(1.0);
        let mut c = counts();
        let x = v(&[1.0]);
        assert_eq!(projected_gradient_pass(&p, &x, 0.0, 0.7, 5, &mut c).unwrap(), x);
        assert_eq!(
            proximal_point_pass(&p, &x, 0.0, 3.0, 4, &InnerSolve::default(), &mut c).unwrap(),
            x
        );
        assert_eq!(c.gradient, 5);
    }

    #[test]
    fn forward_backward_examples() {
        let p = shifted(0.0);
        let y = forward_backward_pass(&p, &CompositeTerm::None, &v(&[1.0]), 0.0, 0.5, 1, &mut counts())
            .unwrap();
        assert_abs_diff_eq!(y[0], 0.5, epsilon = 1e-15);

        let p = shifted(2.0);
        let g = CompositeTerm::l1(1.0).unwrap();
        let y = forward_backward_pass(&p, &g, &v(&[0.0]), 0.0, 1.0, 1, &mut counts()).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-15);
        // x = 1: gradient step reaches 2, threshold brings it back to 1.
        let y = forward_backward_pass(&p, &g, &v(&[1.0]), 0.0, 1.0, 25, &mut counts()).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn proximal_point_halves() {
        let p = shifted(0.0);
        let inner = InnerSolve::default();
        let y = proximal_point_pass(&p, &v(&[1.0]), 0.0, 1.0, 1, &inner, &mut counts()).unwrap();
        assert_abs_diff_eq!(y[0], 0.5, epsilon = 1e-15);
        let y = proximal_point_pass(&p, &v(&[1.0]), 0.0, 1.0, 3, &inner, &mut counts()).unwrap();
        assert_abs_diff_eq!(y[0], 0.125, epsilon = 1e-15);
    }

    #[test]
    fn proximal_point_inner_loop_matches_closed_form() {
        // Same cost without closed forms.
        let f = FnCost::new(1, |x, _| 0.5 * x[0] * x[0], |x, _| x.clone());
        let p = ProblemInstance::new(f, 1.0, 1.0).unwrap();
        let mut c = counts();
        let y = proximal_point_pass(&p, &v(&[1.0]), 0.0, 1.0, 3, &InnerSolve::default(), &mut c)
            .unwrap();
        assert_abs_diff_eq!(y[0], 0.125, epsilon = 1e-10);
        assert!(c.inner_iterations > 0);

        // Loose metadata keeps the inner step from being exact.
        let f = FnCost::new(1, |x, _| 0.5 * x[0] * x[0], |x, _| x.clone());
        let loose = ProblemInstance::new(f, 0.5, 2.0).unwrap();
        let capped = InnerSolve {
            tolerance: 1e-300,
            max_iterations: 3,
        };
        let err = proximal_point_pass(&loose, &v(&[1.0]), 0.0, 1.0, 1, &capped, &mut c).unwrap_err();
        assert!(matches!(err, Error::InexactInnerSolve { iterations: 3, .. }));
    }

    fn equality_problem() -> (ProblemInstance, AffineSubspace) {
        let f = QuadraticCost::new(Matrix::identity(2, 2), vec![Drift::default(); 2]).unwrap();
        let s = AffineSubspace::new(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[1.0])).unwrap();
        (ProblemInstance::new(f, 1.0, 1.0).unwrap(), s)
    }

    #[test]
    fn dual_ascent_single_step() {
        let (p, s) = equality_problem();
        let inner = InnerSolve::default();
        let (x, l) =
            dual_ascent_pass(&p, &v(&[0.0, 0.0]), &v(&[0.0]), 0.0, 0.5, 1, &s, &inner, &mut counts())
                .unwrap();
        assert_abs_diff_eq!(l[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x, v(&[0.5, 0.5]), epsilon = 1e-15);
    }

    #[test]
    fn dual_ascent_at_kkt_point_is_stationary() {
        let (p, s) = equality_problem();
        let inner = InnerSolve::default();
        let (x, l) =
            dual_ascent_pass(&p, &v(&[0.0, 0.0]), &v(&[-0.5]), 0.0, 0.3, 4, &s, &inner, &mut counts())
                .unwrap();
        assert_abs_diff_eq!(l[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x, v(&[0.5, 0.5]), epsilon = 1e-15);
    }

    #[test]
    fn dual_ascent_inactive_constraint() {
        // Unconstrained minimizer (0.3, 0.7) already satisfies x₁ + x₂ = 1.
        let f = QuadraticCost::new(
            Matrix::identity(2, 2),
            vec![Drift::constant(-0.3), Drift::constant(-0.7)],
        )
        .unwrap();
        let p = ProblemInstance::new(f, 1.0, 1.0).unwrap();
        let s = AffineSubspace::new(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[1.0])).unwrap();
        let (_, l) = dual_ascent_pass(
            &p,
            &v(&[0.0, 0.0]),
            &v(&[0.0]),
            0.0,
            0.5,
            3,
            &s,
            &InnerSolve::default(),
            &mut counts(),
        )
        .unwrap();
        assert!(l[0].abs() < 1e-15);
    }

    #[test]
    fn dual_ascent_generic_inner_solve() {
        let f = FnCost::new(2, |x, _| 0.5 * x.norm_squared(), |x, _| x.clone());
        let p = ProblemInstance::new(f, 1.0, 1.0).unwrap();
        let s = AffineSubspace::new(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[1.0])).unwrap();
        let (x, l) = dual_ascent_pass(
            &p,
            &v(&[0.0, 0.0]),
            &v(&[0.0]),
            0.0,
            0.5,
            1,
            &s,
            &InnerSolve::default(),
            &mut counts(),
        )
        .unwrap();
        assert_abs_diff_eq!(l[0], -0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(x, v(&[0.5, 0.5]), epsilon = 1e-10);
    }

    #[test]
    fn divergence_is_reported_with_iteration() {
        let f = QuadraticCost::new(Matrix::identity(1, 1), vec![Drift::default()]).unwrap();
        // Metadata claims L = 1, but a step of 30 on the identity Hessian blows up.
        let p = ProblemInstance::new(f, 1.0, 1.0).unwrap();
        let err = projected_gradient_pass(&p, &v(&[1.0]), 0.0, 30.0, 100, &mut counts()).unwrap_err();
        match err {
            Error::Divergence { iteration, .. } => assert_eq!(iteration, 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stepsize_guard() {
        let p = shifted(0.0);
        let config = SolverConfig::new(Method::ProjectedGradient, 3.0, 1);
        let msg = config.validate(&p).unwrap_err().to_string();
        assert!(msg.contains("2/L"), "{msg}");
        assert!(SolverConfig::new(Method::ProjectedGradient, 0.5, 0)
            .validate(&p)
            .is_err());
        assert!(SolverConfig::new(Method::ProximalPoint, 5.0, 1).validate(&p).is_ok());
    }

    #[test]
    fn default_steps() {
        let f = QuadraticCost::new(
            Matrix::from_diagonal(&v(&[1.0, 10.0])),
            vec![Drift::default(); 2],
        )
        .unwrap();
        let p = ProblemInstance::new(f, 1.0, 10.0).unwrap();
        let c = SolverConfig::with_default_step(Method::ProjectedGradient, &p, 1).unwrap();
        assert_abs_diff_eq!(c.step, 2.0 / 11.0);
        assert_abs_diff_eq!(c.theoretical_rate(&p).unwrap(), 9.0 / 11.0, epsilon = 1e-15);

        let (p, _) = equality_problem();
        let p = p
            .with_set(ConvexSet::affine(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[1.0])).unwrap())
            .unwrap();
        let c = SolverConfig::with_default_step(Method::DualAscent, &p, 1).unwrap();
        assert_abs_diff_eq!(c.step, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.theoretical_rate(&p).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_start_is_projected() {
        let p = shifted(0.0)
            .with_set(ConvexSet::boxed(v(&[-1.0]), v(&[1.0])).unwrap())
            .unwrap();
        let schedule = SamplingSchedule::new(0.0, 0.1, 3).unwrap();
        let config = SolverConfig::new(Method::ProjectedGradient, 0.5, 1);
        let r = run_tracking(&p, &schedule, &config, &v(&[5.0])).unwrap();
        assert_eq!(r.rows()[0].x, vec![1.0]);
        assert_eq!(r.rows()[1].x, vec![0.5]);
        assert_eq!(r.meta.counts.gradient, 2);
    }

    #[test]
    fn runs_are_deterministic() {
        let p = shifted(0.3);
        let schedule = SamplingSchedule::new(0.0, 0.1, 50).unwrap();
        let config = SolverConfig::new(Method::ProximalPoint, 0.8, 2);
        let a = run_tracking(&p, &schedule, &config, &v(&[2.0])).unwrap();
        let b = run_tracking(&p, &schedule, &config, &v(&[2.0])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("newton".parse::<Method>().is_err());
    }
}
