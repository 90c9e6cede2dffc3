//! Tracking metrics, contraction checks and order-in-`h` fits.

use serde::{Deserialize, Serialize};

use crate::oracle::GroundTruth;
use crate::pipeline::{execute, RunPlan};
use crate::prediction::PredictionMode;
use crate::running::{correct, EvalCounts, Method};
use crate::{
    ConvexSet, Error, PredictionConfig, ProblemInstance, Result, SolverConfig, TrajectoryRecord,
    Vector,
};

/// Slack added to every per-step contraction bound.
pub const CONTRACTION_TOLERANCE: f64 = 1e-9;
/// Fraction of samples, at the end of a run, over which the asymptotic error is taken.
pub const TAIL_FRACTION: f64 = 0.2;
pub const MIN_GRID_POINTS: usize = 4;
/// Smallest accepted ratio between the largest and smallest `h` of a fit.
pub const MIN_GRID_SPAN: f64 = 8.0;

/// `max{|1 − αm|, |1 − αL|}`, the per-iteration contraction factor of a
/// gradient step on an `m`-strongly convex, `L`-smooth function.
pub fn contraction_rate(m: f64, l: f64, step: f64) -> Result<f64> {
    if !(m > 0.0) || !(l >= m) || !l.is_finite() {
        return Err(Error::InvalidInput(format!(
            "contraction rate needs 0 < m ≤ L, got m = {m}, L = {l}"
        )));
    }
    if !(step > 0.0 && step < 2.0 / l) {
        return Err(Error::InvalidStepsize(format!(
            "α = {step} is outside (0, 2/L) = (0, {})",
            2.0 / l
        )));
    }
    Ok((1.0 - step * m).abs().max((1.0 - step * l).abs()))
}

/// Stepsize `2/(m+L)` minimizing [`contraction_rate`].
pub fn optimal_step(m: f64, l: f64) -> f64 {
    2.0 / (m + l)
}

/// Number of samples in the tail window used for the asymptotic error.
pub fn tail_len(n: usize) -> usize {
    ((n as f64 * TAIL_FRACTION).ceil() as usize).clamp(1.min(n), n)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalConstants {
    /// Per-iteration correction rate `ϱ`.
    pub rate: Option<f64>,
    /// `ϱ₁ = ϱ^C`, the contraction over one sample.
    pub rate_per_sample: Option<f64>,
    /// Per-step rate `ϱ₂` of the approximate prediction.
    pub prediction_rate: Option<f64>,
    /// Largest measured optimizer displacement between consecutive samples.
    pub k_measured: f64,
    /// `ϱ₁ K / (1 − ϱ₁)`, the fixed-point error bound of a running method.
    pub bound_fixed_point: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContractionTarget {
    /// `‖x_{k+1} − x*_{k+1}‖ ≤ ϱ₁ (‖x_k − x*_k‖ + K_k)`
    Primal,
    /// `‖x_{k+1} − x*_{k+1}‖ ≤ ϱ₁ ‖x̃_{k+1|k} − x*_{k+1}‖`
    Prediction,
    /// The primal check applied to the multipliers of dual ascent.
    Multiplier,
    /// No theoretical rate available.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    /// Largest tracking error over the final 20% of samples.
    pub asymptotic_error: f64,
    pub mean_error: f64,
    pub contraction_target: ContractionTarget,
    pub contraction_checks: usize,
    pub contraction_violations: usize,
    /// Largest amount by which a bound was exceeded; `0` without violations.
    pub max_excess: f64,
    pub theoretical: TheoreticalConstants,
    /// `∑_{k=1}^{T} f(x_k; t_k) − f(x*_k; t_k)`.
    pub regret_total: f64,
    /// `Reg_T / T`.
    pub regret_average: f64,
    /// `(1/T) ∑_{k=1}^{T} ‖Π_X(x_k − α∇f(x_k; t_k)) − x_k‖²`.
    pub avg_fpr: f64,
    /// Largest feasible-set diameter over the run, for bounded sets.
    pub diameter: Option<f64>,
    /// Asymptotic multiplier error of dual ascent.
    pub dual_asymptotic_error: Option<f64>,
    /// Largest `‖Ax − b‖` over the tail, for dual ascent.
    pub constraint_violation: Option<f64>,
    pub counts: EvalCounts,
}

fn check_alignment(record: &TrajectoryRecord, truth: &[Vector]) -> Result<()> {
    if record.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "record has {} samples, ground truth has {}",
            record.len(),
            truth.len()
        )));
    }
    for (row, xs) in record.rows().iter().zip(truth) {
        if row.x.len() != xs.len() {
            return Err(Error::InvalidInput(format!(
                "sample {} has dimension {}, ground truth has {}",
                row.k,
                row.x.len(),
                xs.len()
            )));
        }
    }
    Ok(())
}

/// `(Reg_T / T, avg_fpr)` over `k = 1..T`, with the residual taken at stepsize `step`.
pub fn regret_and_fpr(
    record: &TrajectoryRecord,
    truth: &[Vector],
    p: &ProblemInstance,
    step: f64,
) -> Result<(f64, f64)> {
    let (total, fpr) = regret_and_fpr_totals(record, truth, p, step)?;
    let t = record.len().saturating_sub(1);
    if t == 0 {
        return Ok((0.0, 0.0));
    }
    Ok((total / t as f64, fpr / t as f64))
}

fn regret_and_fpr_totals(
    record: &TrajectoryRecord,
    truth: &[Vector],
    p: &ProblemInstance,
    step: f64,
) -> Result<(f64, f64)> {
    check_alignment(record, truth)?;
    let mut regret = 0.0;
    let mut fpr = 0.0;
    for (row, xs) in record.rows().iter().zip(truth).skip(1) {
        let x = row.x();
        regret += p.objective(&x, row.t) - p.objective(xs, row.t);
        let r = p.fixed_point_residual(&x, row.t, step)?;
        fpr += r * r;
    }
    Ok((regret, fpr))
}

/// Fills a [`MetricsReport`] from a completed run aligned with its ground truth.
pub fn compute_metrics(
    record: &TrajectoryRecord,
    truth: &GroundTruth,
    p: &ProblemInstance,
    solver: &SolverConfig,
    prediction: Option<&PredictionConfig>,
) -> Result<MetricsReport> {
    check_alignment(record, &truth.points)?;
    let n = record.len();
    if n == 0 {
        return Err(Error::InvalidInput("record is empty".into()));
    }
    let rows = record.rows();
    let errors: Vec<f64> = rows
        .iter()
        .zip(&truth.points)
        .map(|(r, xs)| (r.x() - xs).norm())
        .collect();
    let tail = n - tail_len(n);
    let asymptotic_error = errors[tail..].iter().copied().fold(0.0, f64::max);
    let mean_error = errors.iter().sum::<f64>() / n as f64;
    let displacements = truth.displacements();
    let k_measured = displacements.iter().copied().fold(0.0, f64::max);

    let rate = solver.theoretical_rate(p);
    let rate_per_sample = rate.map(|r| r.powi(solver.corrections as i32));
    let prediction_rate = prediction
        .filter(|c| c.mode == PredictionMode::ApproximateProjected)
        .and_then(|c| contraction_rate(p.strong_convexity(), p.smoothness(), c.step).ok());
    let bound_fixed_point = rate_per_sample
        .filter(|r| *r < 1.0 && !record.meta.prediction_correction && solver.method != Method::DualAscent)
        .map(|r| r * k_measured / (1.0 - r));

    let mut checks = 0;
    let mut violations = 0;
    let mut max_excess: f64 = 0.0;
    let mut tally = |lhs: f64, bound: f64| {
        checks += 1;
        let excess = lhs - (bound + CONTRACTION_TOLERANCE);
        if excess > 0.0 {
            violations += 1;
            max_excess = max_excess.max(excess);
        }
    };

    let mut dual_asymptotic_error = None;
    let mut constraint_violation = None;
    let target = match (rate_per_sample, solver.method) {
        (None, _) => ContractionTarget::None,
        (Some(r), Method::DualAscent) => match &truth.duals {
            Some(duals) => {
                let derr: Vec<f64> = rows
                    .iter()
                    .zip(duals)
                    .map(|(row, ls)| row.dual().map(|l| (l - ls).norm()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::InvalidInput("dual ascent record has no multipliers".into()))?;
                for k in 0..n - 1 {
                    let kk = (&duals[k + 1] - &duals[k]).norm();
                    tally(derr[k + 1], r * (derr[k] + kk));
                }
                dual_asymptotic_error = Some(derr[tail..].iter().copied().fold(0.0, f64::max));
                ContractionTarget::Multiplier
            }
            None => ContractionTarget::None,
        },
        (Some(r), _) if record.meta.prediction_correction => {
            for (k, row) in rows.iter().enumerate().skip(1) {
                if let Some(pred) = row.prediction() {
                    tally(errors[k], r * (pred - &truth.points[k]).norm());
                }
            }
            ContractionTarget::Prediction
        }
        (Some(r), _) => {
            for k in 0..n - 1 {
                tally(errors[k + 1], r * (errors[k] + displacements[k]));
            }
            ContractionTarget::Primal
        }
    };
    if solver.method == Method::DualAscent {
        let mut worst: f64 = 0.0;
        for row in &rows[tail..] {
            let s = solver.constraint(p, row.t)?;
            worst = worst.max(s.residual(&row.x()).norm());
        }
        constraint_violation = Some(worst);
    }

    let (regret_total, fpr_total) =
        regret_and_fpr_totals(record, &truth.points, p, solver.residual_step(p))?;
    let t = (n - 1).max(1) as f64;
    let diameter = max_diameter(rows.iter().map(|r| p.feasible_set(r.t)));

    Ok(MetricsReport {
        samples: n,
        asymptotic_error,
        mean_error,
        contraction_target: target,
        contraction_checks: checks,
        contraction_violations: violations,
        max_excess,
        theoretical: TheoreticalConstants {
            rate,
            rate_per_sample,
            prediction_rate,
            k_measured,
            bound_fixed_point,
        },
        regret_total,
        regret_average: regret_total / t,
        avg_fpr: fpr_total / t,
        diameter,
        dual_asymptotic_error,
        constraint_violation,
        counts: record.meta.counts,
    })
}

/// Largest per-iteration error ratio of the configured method on the problem
/// frozen at time `t`, measured over `iterations` single-step corrections
/// from `start`.
///
/// Dual ascent is measured on the multiplier, starting from zero, against
/// `lambda_star`. Ratios are only taken while the error is above `1e-9` of
/// its initial value.
pub fn empirical_rate(
    p: &ProblemInstance,
    solver: &SolverConfig,
    t: f64,
    start: &Vector,
    xstar: &Vector,
    lambda_star: Option<&Vector>,
    iterations: usize,
) -> Result<f64> {
    let mut single = solver.clone();
    single.corrections = 1;
    single.validate(p)?;
    let mut counts = EvalCounts::default();
    let mut x = p.feasible_set(t).project(start)?;
    let mut lambda = match (solver.method, lambda_star) {
        (Method::DualAscent, Some(ls)) => Some(Vector::zeros(ls.len())),
        (Method::DualAscent, None) => {
            return Err(Error::InvalidInput("dual ascent rate needs λ*".into()))
        }
        _ => None,
    };
    let error = |x: &Vector, lambda: &Option<Vector>| match (lambda, lambda_star) {
        (Some(l), Some(ls)) => (l - ls).norm(),
        _ => (x - xstar).norm(),
    };
    let e0 = error(&x, &lambda);
    let floor = 1e-9 * e0;
    let mut prev = e0;
    let mut worst: f64 = 0.0;
    for _ in 0..iterations {
        if prev <= floor || prev == 0.0 {
            break;
        }
        let (nx, nl) = correct(p, &single, &x, lambda.as_ref(), t, &mut counts)?;
        x = nx;
        lambda = nl;
        let e = error(&x, &lambda);
        worst = worst.max(e / prev);
        prev = e;
    }
    Ok(worst)
}

/// Least-squares fit of `log(error)` against `log(h)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub grid: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

impl OrderFit {
    pub fn from_points(grid: &[f64], errors: &[f64]) -> Result<Self> {
        validate_grid(grid)?;
        if errors.len() != grid.len() {
            return Err(Error::InvalidInput("one error per grid point is required".into()));
        }
        if let Some((h, e)) = grid.iter().zip(errors).find(|(_, e)| !(**e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "error at h = {h} is {e}; a log-log fit needs positive errors"
            )));
        }
        let xs: Vec<f64> = grid.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residual = (xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        Ok(Self {
            grid: grid.to_vec(),
            errors: errors.to_vec(),
            slope,
            intercept,
            residual,
        })
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(Error::InvalidInput(format!(
            "order fit needs at least {MIN_GRID_POINTS} values of h, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(Error::InvalidInput("grid values must be positive and finite".into()));
    }
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(0.0, f64::max);
    if hi / lo < MIN_GRID_SPAN * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!(
            "grid spans a factor {:.3}, at least {MIN_GRID_SPAN} is required",
            hi / lo
        )));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("grid values must be distinct".into()));
    }
    Ok(())
}

/// Runs `plan` at every `h` of the grid and fits the asymptotic-error order.
///
/// With the `parallel` feature the runs fan out over the rayon pool; results
/// are merged in grid order either way.
pub fn fit_order(plan: &RunPlan, grid: &[f64]) -> Result<OrderFit> {
    validate_grid(grid)?;
    let run = |h: &f64| -> Result<f64> {
        let outcome = plan.with_period(*h).and_then(|p| execute(&p));
        outcome
            .map(|o| o.metrics.asymptotic_error)
            .map_err(|e| Error::AtGridPoint {
                label: format!("h = {h}"),
                source: Box::new(e),
            })
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<f64>> = {
        use rayon::prelude::*;
        grid.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<f64>> = grid.iter().map(run).collect();
    let errors = results.into_iter().collect::<Result<Vec<_>>>()?;
    OrderFit::from_points(grid, &errors)
}

/// Largest diameter of the sets sampled at `times`, if all are bounded.
pub fn max_diameter(sets: impl IntoIterator<Item = ConvexSet>) -> Option<f64> {
    sets.into_iter()
        .map(|s| s.diameter())
        .try_fold(0.0f64, |acc, d| d.filter(|d| d.is_finite()).map(|d| acc.max(d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn contraction_rate_examples() {
        assert_abs_diff_eq!(contraction_rate(1.0, 2.0, 2.0 / 3.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(contraction_rate(1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(contraction_rate(1.0, 10.0, 2.0 / 11.0).unwrap(), 9.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn contraction_rate_rejects_bad_steps() {
        for step in [0.0, -1.0, 0.2, 0.3, f64::NAN] {
            assert!(matches!(
                contraction_rate(1.0, 10.0, step),
                Err(Error::InvalidStepsize(_))
            ));
        }
        assert!(contraction_rate(0.0, 1.0, 0.5).is_err());
        assert!(contraction_rate(2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn optimal_step_minimizes_rate() {
        for (m, l) in [(1.0, 10.0), (0.3, 0.5), (2.0, 2.0), (1.0, 100.0)] {
            let best = contraction_rate(m, l, optimal_step(m, l)).unwrap();
            assert_abs_diff_eq!(best, (l - m) / (l + m), epsilon = 1e-14);
            let bound = 2.0 / l;
            for i in 1..2000 {
                let step = bound * i as f64 / 2000.0;
                assert!(contraction_rate(m, l, step).unwrap() >= best - 1e-14);
            }
        }
    }

    #[test]
    fn tail_window() {
        assert_eq!(tail_len(200), 40);
        assert_eq!(tail_len(201), 41);
        assert_eq!(tail_len(3), 1);
        assert_eq!(tail_len(1), 1);
    }

    #[test]
    fn order_fit_recovers_power_laws() {
        let grid = [0.2, 0.1, 0.05, 0.025];
        for order in [1.0, 2.0, 1.5] {
            let errors: Vec<f64> = grid.iter().map(|h: &f64| 3.0 * h.powf(order)).collect();
            let fit = OrderFit::from_points(&grid, &errors).unwrap();
            assert_abs_diff_eq!(fit.slope, order, epsilon = 1e-12);
            assert_abs_diff_eq!(fit.intercept, 3.0f64.ln(), epsilon = 1e-12);
            assert!(fit.residual < 1e-12);
        }
    }

    #[test]
    fn order_fit_grid_rules() {
        let e = [1.0; 4];
        assert!(OrderFit::from_points(&[0.2, 0.1, 0.05], &e[..3]).is_err());
        assert!(OrderFit::from_points(&[0.2, 0.1, 0.08, 0.05], &e).is_err());
        assert!(OrderFit::from_points(&[0.2, 0.1, 0.1, 0.025], &e).is_err());
        assert!(OrderFit::from_points(&[0.2, 0.1, 0.05, 0.025], &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(OrderFit::from_points(&[0.2, 0.1, 0.05, 0.025], &e).is_ok());
    }
}
