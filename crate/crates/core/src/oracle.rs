//! Ground-truth optimizer trajectories and the benchmark registry.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::problem::{soft_threshold, Drift, RateConstants, SetDescription};
use crate::{
    CompositeTerm, ConvexSet, Error, Matrix, Method, ProblemInstance, QuadraticCost, Result,
    SamplingSchedule, Vector,
};

pub const BATCH_TOLERANCE: f64 = 1e-10;
pub const BATCH_MAX_ITERATIONS: usize = 1_000_000;

/// Registered benchmark names, sorted.
pub const BENCHMARK_NAMES: [&str; 5] = [
    "circle",
    "circle-box",
    "drift-quadratic",
    "equality-quadratic",
    "l1-stream",
];

pub type TrajectoryFn = Arc<dyn Fn(f64) -> Vector + Send + Sync>;

/// Tunable parameters shared by the benchmark families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkParams {
    /// Angular velocity `ω` of the moving target; `0` gives a static problem.
    pub omega: f64,
    /// Radius of the circular target.
    pub radius: f64,
    /// Largest Hessian eigenvalue of `drift-quadratic`.
    pub smoothness: f64,
    /// `λ` of `l1-stream`.
    pub l1_weight: f64,
    pub box_lower: Vec<f64>,
    pub box_upper: Vec<f64>,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            radius: 1.0,
            smoothness: 10.0,
            l1_weight: 0.25,
            box_lower: vec![-0.5, -0.5],
            box_upper: vec![0.5, 0.5],
        }
    }
}

#[derive(Clone)]
pub struct BenchmarkProblem {
    pub name: String,
    pub description: String,
    pub instance: ProblemInstance,
    /// `t ↦ x*(t)`, when known in closed form.
    pub trajectory: Option<TrajectoryFn>,
    /// `t ↦ λ*(t)` for equality-constrained problems.
    pub dual_trajectory: Option<TrajectoryFn>,
    /// Method the benchmark is meant to be run with.
    pub default_method: Method,
}

impl fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("name", &self.name)
            .field("instance", &self.instance)
            .field("trajectory", &self.trajectory.is_some())
            .finish_non_exhaustive()
    }
}

impl BenchmarkProblem {
    pub fn optimizer(&self, t: f64) -> Option<Vector> {
        self.trajectory.as_ref().map(|f| f(t))
    }

    /// `h C0 / m`, the bound on optimizer displacement between samples.
    pub fn displacement_bound(&self, h: f64) -> Option<f64> {
        let m = self.instance.strong_convexity();
        let c0 = self.instance.rates().c0?;
        (m > 0.0).then(|| h * c0 / m)
    }
}

/// `x ↦ R (cos ωt, sin ωt)` as a linear drift: `−r(t)`.
fn circle_drift(omega: f64, radius: f64) -> Vec<Drift> {
    vec![
        Drift::sinusoid(-radius, omega, FRAC_PI_2),
        Drift::sinusoid(-radius, omega, 0.0),
    ]
}

fn circle_target(omega: f64, radius: f64) -> impl Fn(f64) -> Vector + Send + Sync + Copy {
    move |t| Vector::from_column_slice(&[radius * (omega * t).cos(), radius * (omega * t).sin()])
}

/// `½‖x − r(t)‖²`
fn circle_cost(params: &BenchmarkParams) -> Result<QuadraticCost> {
    let r2 = params.radius * params.radius;
    Ok(
        QuadraticCost::new(Matrix::identity(2, 2), circle_drift(params.omega, params.radius))?
            .with_shift(move |_| 0.5 * r2),
    )
}

fn circle_rates(params: &BenchmarkParams) -> RateConstants {
    let (w, r) = (params.omega.abs(), params.radius.abs());
    RateConstants {
        c0: Some(w * r),
        c1: Some(0.0),
        c2: Some(0.0),
        c3: Some(w * w * r),
    }
}

fn check_params(params: &BenchmarkParams) -> Result<()> {
    if !params.omega.is_finite() || !(params.radius > 0.0) || !params.radius.is_finite() {
        return Err(Error::InvalidInput(
            "benchmark needs finite ω and a positive radius".into(),
        ));
    }
    Ok(())
}

fn circle(params: &BenchmarkParams) -> Result<BenchmarkProblem> {
    let instance = ProblemInstance::new(circle_cost(params)?, 1.0, 1.0)?.with_rates(circle_rates(params));
    Ok(BenchmarkProblem {
        name: "circle".into(),
        description: "½‖x − r(t)‖², r on a circle, unconstrained".into(),
        instance,
        trajectory: Some(Arc::new(circle_target(params.omega, params.radius))),
        dual_trajectory: None,
        default_method: Method::ProjectedGradient,
    })
}

fn circle_box(params: &BenchmarkParams) -> Result<BenchmarkProblem> {
    let lower = Vector::from_vec(params.box_lower.clone());
    let upper = Vector::from_vec(params.box_upper.clone());
    let set = ConvexSet::boxed(lower.clone(), upper.clone())?;
    if set.dimension() != Some(2) {
        return Err(Error::InvalidInput("circle-box needs 2-dimensional bounds".into()));
    }
    let instance = ProblemInstance::new(circle_cost(params)?, 1.0, 1.0)?
        .with_set(set)?
        .with_rates(circle_rates(params));
    let target = circle_target(params.omega, params.radius);
    Ok(BenchmarkProblem {
        name: "circle-box".into(),
        description: "½‖x − r(t)‖² over a box; x* is the clamped target".into(),
        instance,
        trajectory: Some(Arc::new(move |t| {
            let r = target(t);
            Vector::from_fn(2, |i, _| r[i].clamp(lower[i], upper[i]))
        })),
        dual_trajectory: None,
        default_method: Method::ProjectedGradient,
    })
}

fn drift_quadratic(params: &BenchmarkParams) -> Result<BenchmarkProblem> {
    let l = params.smoothness;
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidInput(format!("drift-quadratic needs L > 0, got {l}")));
    }
    let w = params.omega;
    let cost = QuadraticCost::new(
        Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, l])),
        vec![Drift::sinusoid(1.0, w, 0.0), Drift::sinusoid(1.0, w, FRAC_PI_2)],
    )?;
    let instance = ProblemInstance::new(cost, l.min(1.0), l.max(1.0))?.with_rates(RateConstants {
        c0: Some(w.abs()),
        c1: Some(0.0),
        c2: Some(0.0),
        c3: Some(w * w),
    });
    Ok(BenchmarkProblem {
        name: "drift-quadratic".into(),
        description: "½xᵀQx + b(t)ᵀx, Q = diag(1, L), b on a circle".into(),
        instance,
        trajectory: Some(Arc::new(move |t| {
            Vector::from_column_slice(&[-(w * t).sin(), -(w * t).cos() / l])
        })),
        dual_trajectory: None,
        default_method: Method::ProjectedGradient,
    })
}

fn l1_stream(params: &BenchmarkParams) -> Result<BenchmarkProblem> {
    let weight = params.l1_weight;
    let instance = ProblemInstance::new(circle_cost(params)?, 1.0, 1.0)?
        .with_composite(CompositeTerm::l1(weight)?)?
        .with_rates(circle_rates(params));
    let target = circle_target(params.omega, params.radius);
    Ok(BenchmarkProblem {
        name: "l1-stream".into(),
        description: "½‖x − r(t)‖² + λ‖x‖₁; x* is the soft-thresholded target".into(),
        instance,
        trajectory: Some(Arc::new(move |t| soft_threshold(&target(t), weight))),
        dual_trajectory: None,
        default_method: Method::ForwardBackward,
    })
}

fn equality_quadratic(params: &BenchmarkParams) -> Result<BenchmarkProblem> {
    let a = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let set = ConvexSet::affine(a, Vector::from_column_slice(&[1.0]))?;
    let instance = ProblemInstance::new(circle_cost(params)?, 1.0, 1.0)?
        .with_set(set)?
        .with_rates(circle_rates(params));
    let target = circle_target(params.omega, params.radius);
    Ok(BenchmarkProblem {
        name: "equality-quadratic".into(),
        description: "½‖x − r(t)‖² subject to x₁ + x₂ = 1".into(),
        instance,
        trajectory: Some(Arc::new(move |t| {
            let r = target(t);
            let shift = (1.0 - r[0] - r[1]) / 2.0;
            Vector::from_column_slice(&[r[0] + shift, r[1] + shift])
        })),
        dual_trajectory: Some(Arc::new(move |t| {
            let r = target(t);
            Vector::from_column_slice(&[(r[0] + r[1] - 1.0) / 2.0])
        })),
        default_method: Method::DualAscent,
    })
}

/// All registered benchmarks with default parameters, sorted by name.
pub fn registry() -> Vec<BenchmarkProblem> {
    let params = BenchmarkParams::default();
    BENCHMARK_NAMES
        .iter()
        .map(|name| lookup(name, &params).expect("default benchmark parameters are valid"))
        .collect()
}

pub fn lookup(name: &str, params: &BenchmarkParams) -> Result<BenchmarkProblem> {
    check_params(params)?;
    match name {
        "circle" => circle(params),
        "circle-box" => circle_box(params),
        "drift-quadratic" => drift_quadratic(params),
        "l1-stream" => l1_stream(params),
        "equality-quadratic" => equality_quadratic(params),
        other => Err(Error::NotFound(other.to_string())),
    }
}

/// A user-defined `½xᵀQx + ℓ(t)ᵀx` over a fixed set.
///
/// `m` and `L` are the extreme eigenvalues of `Q`. The trajectory is known in
/// closed form only when the set is free space and `Q` is positive definite.
pub fn custom_quadratic(q: Matrix, drift: Vec<Drift>, set: &SetDescription) -> Result<BenchmarkProblem> {
    let cost = QuadraticCost::new(q, drift)?;
    let (lo, hi) = cost.eigen_range();
    let tol = 1e-12 * hi.abs().max(1.0);
    if lo < -tol {
        return Err(Error::InvalidInput(format!(
            "quadratic matrix has a negative eigenvalue {lo}"
        )));
    }
    if !(hi > 0.0) {
        return Err(Error::InvalidInput("quadratic matrix must be nonzero".into()));
    }
    let c0 = cost
        .drifts()
        .iter()
        .map(|d| (d.slope.abs() + (d.amplitude * d.frequency).abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let c3 = cost
        .drifts()
        .iter()
        .map(|d| (d.amplitude * d.frequency * d.frequency).powi(2))
        .sum::<f64>()
        .sqrt();
    let set = set.build()?;
    let trajectory: Option<TrajectoryFn> = if set.is_free() && lo > tol {
        let c = cost.clone();
        Some(Arc::new(move |t| {
            c.unconstrained_minimizer(t)
                .expect("positive definite matrix has a Cholesky factor")
        }))
    } else {
        None
    };
    let default_method = if matches!(set, ConvexSet::Affine(_)) && lo > tol {
        Method::DualAscent
    } else {
        Method::ProjectedGradient
    };
    let instance = ProblemInstance::new(cost, lo.max(0.0), hi)?
        .with_set(set)?
        .with_rates(RateConstants {
            c0: Some(c0),
            c1: Some(0.0),
            c2: Some(0.0),
            c3: Some(c3),
        });
    Ok(BenchmarkProblem {
        name: "quadratic".into(),
        description: "user-defined quadratic".into(),
        instance,
        trajectory,
        dual_trajectory: None,
        default_method,
    })
}

/// High-accuracy minimizer at time `t` by projected gradient (or
/// forward-backward) iterations with `α = 2/(m+L)`, stopped when the
/// fixed-point residual drops to `tol`.
pub fn solve_batch(
    p: &ProblemInstance,
    t: f64,
    x_init: &Vector,
    tol: f64,
    max_iterations: usize,
) -> Result<Vector> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if x_init.len() != p.dimension() {
        return Err(Error::InvalidInput("initial point has the wrong dimension".into()));
    }
    let (m, l) = (p.strong_convexity(), p.smoothness());
    let step = if m > 0.0 { 2.0 / (m + l) } else { 1.0 / l };
    let set = p.feasible_set(t);
    let mut x = p.backward_step(x_init, step, &set)?;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        let y = p.backward_step(&(&x - p.cost().gradient(&x, t) * step), step, &set)?;
        residual = (&y - &x).norm();
        x = y;
        if residual <= tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        residual,
    })
}

/// `λ* = −(AAᵀ)⁻¹ A ∇f(x*)` from the stationarity condition.
pub fn dual_from_primal(p: &ProblemInstance, x: &Vector, t: f64) -> Option<Vector> {
    match p.feasible_set(t) {
        ConvexSet::Affine(s) => {
            let g = p.cost().gradient(x, t);
            Some(-s.solve_gram(&(s.matrix() * g)))
        }
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    Batch,
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub points: Vec<Vector>,
    /// Optimal multipliers, for equality-constrained problems.
    pub duals: Option<Vec<Vector>>,
    pub provenance: Vec<Provenance>,
}

impl GroundTruth {
    /// `‖x*(t_{k+1}) − x*(t_k)‖` for each consecutive pair.
    pub fn displacements(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect()
    }
}

/// `x*(t_k)` for every sample, analytic where available, otherwise by
/// warm-started batch solves.
pub fn ground_truth_series(bp: &BenchmarkProblem, schedule: &SamplingSchedule) -> Result<GroundTruth> {
    let p = &bp.instance;
    let mut points = Vec::with_capacity(schedule.len());
    let mut provenance = Vec::with_capacity(schedule.len());
    let mut warm = Vector::zeros(p.dimension());
    for (k, t) in schedule.times().enumerate() {
        let x = match &bp.trajectory {
            Some(f) => {
                provenance.push(Provenance::Analytic);
                f(t)
            }
            None => {
                provenance.push(Provenance::Batch);
                solve_batch(p, t, &warm, BATCH_TOLERANCE, BATCH_MAX_ITERATIONS)
                    .map_err(|e| e.at_sample(k))?
            }
        };
        warm = x.clone();
        points.push(x);
    }
    let duals = match &bp.dual_trajectory {
        Some(f) => Some(schedule.times().map(|t| f(t)).collect()),
        None => schedule
            .times()
            .zip(&points)
            .map(|(t, x)| dual_from_primal(p, x, t))
            .collect::<Option<Vec<_>>>(),
    };
    Ok(GroundTruth {
        points,
        duals,
        provenance,
    })
}
