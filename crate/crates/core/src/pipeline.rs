//! One benchmark run from plan to metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metrics::compute_metrics;
use crate::oracle::{ground_truth_series, BenchmarkProblem, GroundTruth};
use crate::prediction::run_prediction_correction;
use crate::running::run_tracking;
use crate::{
    Error, MetricsReport, PredictionConfig, Result, SamplingSchedule, SolverConfig,
    TrajectoryRecord, Vector,
};

/// Fewest samples of a run sized by horizon.
pub const MIN_SAMPLES: usize = 200;
pub const DEFAULT_PERTURBATION: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct RunPlan {
    pub benchmark: BenchmarkProblem,
    pub solver: SolverConfig,
    pub prediction: Option<PredictionConfig>,
    pub schedule: SamplingSchedule,
    /// When set, [`RunPlan::with_period`] sizes runs to cover this time span.
    pub horizon: Option<f64>,
    /// Distance of `x0` from `x*(t0)`.
    pub perturbation: f64,
    /// Seed of the perturbation direction.
    pub seed: u64,
    /// Explicit starting point, overriding the perturbation.
    pub x0: Option<Vector>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub record: TrajectoryRecord,
    pub truth: GroundTruth,
    pub metrics: MetricsReport,
}

/// `max(200, ⌈horizon / h⌉)`
pub fn samples_for_horizon(horizon: f64, h: f64) -> Result<usize> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Config(format!("h must be positive, got {h}")));
    }
    Ok(((horizon / h).ceil() as usize).max(MIN_SAMPLES))
}

impl RunPlan {
    pub fn new(benchmark: BenchmarkProblem, solver: SolverConfig, schedule: SamplingSchedule) -> Self {
        Self {
            benchmark,
            solver,
            prediction: None,
            schedule,
            horizon: None,
            perturbation: DEFAULT_PERTURBATION,
            seed: 0,
            x0: None,
        }
    }

    pub fn with_prediction(mut self, prediction: PredictionConfig) -> Self {
        self.prediction = Some(prediction);
        self
    }

    /// Same plan at sampling period `h`.
    pub fn with_period(&self, h: f64) -> Result<Self> {
        let n = match self.horizon {
            Some(horizon) => samples_for_horizon(horizon, h)?,
            None => self.schedule.len(),
        };
        let mut plan = self.clone();
        plan.schedule = SamplingSchedule::new(self.schedule.start(), h, n)?;
        Ok(plan)
    }

    /// `x*(t0) + perturbation · u` with `u` a unit direction drawn from the seed.
    pub fn initial_point(&self, xstar0: &Vector) -> Vector {
        if let Some(x0) = &self.x0 {
            return x0.clone();
        }
        xstar0 + random_unit(xstar0.len(), self.seed) * self.perturbation
    }
}

/// Unit vector with a direction drawn uniformly by rejection from the cube.
pub fn random_unit(n: usize, seed: u64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v = Vector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
        let norm = v.norm();
        if norm > 1e-3 && (norm <= 1.0 || n > 8) {
            return v / norm;
        }
    }
}

pub fn execute(plan: &RunPlan) -> Result<RunOutcome> {
    let p = &plan.benchmark.instance;
    let truth = ground_truth_series(&plan.benchmark, &plan.schedule)?;
    let x0 = plan.initial_point(&truth.points[0]);
    let mut record = match &plan.prediction {
        Some(pc) => run_prediction_correction(p, &plan.schedule, &plan.solver, pc, &x0)?,
        None => run_tracking(p, &plan.schedule, &plan.solver, &x0)?,
    };
    record.attach_ground_truth(&truth.points)?;
    let metrics = compute_metrics(&record, &truth, p, &plan.solver, plan.prediction.as_ref())?;
    Ok(RunOutcome {
        record,
        truth,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{lookup, BenchmarkParams};
    use crate::Method;

    #[test]
    fn unit_direction_is_deterministic() {
        let a = random_unit(3, 7);
        assert_eq!(a, random_unit(3, 7));
        assert!((a.norm() - 1.0).abs() < 1e-15);
        assert_ne!(a, random_unit(3, 8));
    }

    #[test]
    fn horizon_sizing() {
        assert_eq!(samples_for_horizon(20.0, 0.2).unwrap(), 200);
        assert_eq!(samples_for_horizon(20.0, 0.025).unwrap(), 800);
        assert!(samples_for_horizon(0.0, 0.1).is_err());
    }

    #[test]
    fn exact_start_on_static_problem_is_stationary() {
        let params = BenchmarkParams {
            omega: 0.0,
            ..Default::default()
        };
        let bp = lookup("circle", &params).unwrap();
        let solver = SolverConfig::new(Method::ProjectedGradient, 0.5, 1);
        let mut plan = RunPlan::new(bp, solver, SamplingSchedule::new(0.0, 0.1, 50).unwrap());
        plan.perturbation = 0.0;
        let out = execute(&plan).unwrap();
        assert_eq!(out.metrics.asymptotic_error, 0.0);
        assert_eq!(out.metrics.mean_error, 0.0);
        assert!(out.metrics.regret_total.abs() < 1e-15);
        assert_eq!(out.metrics.avg_fpr, 0.0);
    }
}
