//! Browser bindings: simulate a tracking run, fit the error order over `h`,
//! and plot the contraction factor against the stepsize.
//!
//! Every export takes and returns JSON text so the page needs no glue code
//! beyond `JSON.parse`.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use tvopt::metrics::{contraction_rate, fit_order};
use tvopt::oracle::lookup;
use tvopt::pipeline::{execute, RunPlan};
use tvopt::{
    BenchmarkParams, Method, PredictionConfig, PredictionMode, SamplingSchedule, SolverConfig,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Request {
    pub problem: String,
    pub method: Method,
    pub omega: f64,
    pub alpha: f64,
    pub corrections: usize,
    /// `"none"`, `"closed-form"` or `"approximate-projected"`.
    pub prediction: String,
    pub gamma: f64,
    pub steps: usize,
    pub beta: f64,
    pub h: f64,
    pub num_samples: usize,
    pub seed: u64,
}

impl Default for Request {
    fn default() -> Self {
        Request {
            problem: "circle".into(),
            method: Method::ProjectedGradient,
            omega: 1.0,
            alpha: 0.5,
            corrections: 1,
            prediction: "none".into(),
            gamma: 0.0,
            steps: 5,
            beta: 0.5,
            h: 0.1,
            num_samples: 300,
            seed: 0,
        }
    }
}

impl Request {
    fn plan(&self) -> Result<RunPlan, String> {
        let params = BenchmarkParams {
            omega: self.omega,
            ..Default::default()
        };
        let bp = lookup(&self.problem, &params).map_err(|e| e.to_string())?;
        let schedule =
            SamplingSchedule::new(0.0, self.h, self.num_samples).map_err(|e| e.to_string())?;
        let solver = SolverConfig::new(self.method, self.alpha, self.corrections);
        let mut plan = RunPlan::new(bp, solver, schedule);
        plan.seed = self.seed;
        let mode = match self.prediction.as_str() {
            "none" => None,
            "closed-form" => Some(PredictionMode::ClosedForm),
            "approximate-projected" => Some(PredictionMode::ApproximateProjected),
            other => return Err(format!("unknown prediction mode `{other}`")),
        };
        if let Some(mode) = mode {
            plan.prediction = Some(PredictionConfig {
                mode,
                gamma: self.gamma,
                steps: self.steps,
                step: self.beta,
            });
        }
        Ok(plan)
    }
}

#[derive(Debug, Serialize)]
pub struct Simulation {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub xstar: Vec<Vec<f64>>,
    pub error: Vec<f64>,
    pub asymptotic_error: f64,
    pub contraction_violations: usize,
    pub rate: Option<f64>,
    pub gradient_evaluations: u64,
}

#[derive(Debug, Serialize)]
pub struct OrderSweep {
    pub grid: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

#[derive(Debug, Serialize)]
pub struct RateCurve {
    pub steps: Vec<f64>,
    pub rates: Vec<f64>,
    pub best_step: f64,
    pub best_rate: f64,
}

pub fn simulate_request(req: &Request) -> Result<Simulation, String> {
    let out = execute(&req.plan()?).map_err(|e| e.to_string())?;
    let rows = out.record.rows();
    Ok(Simulation {
        t: rows.iter().map(|r| r.t).collect(),
        x: rows.iter().map(|r| r.x.clone()).collect(),
        xstar: out.truth.points.iter().map(|p| p.iter().copied().collect()).collect(),
        error: out.record.errors(),
        asymptotic_error: out.metrics.asymptotic_error,
        contraction_violations: out.metrics.contraction_violations,
        rate: out.metrics.theoretical.rate,
        gradient_evaluations: out.metrics.counts.gradient,
    })
}

pub fn order_sweep_request(req: &Request, grid: &[f64]) -> Result<OrderSweep, String> {
    let mut plan = req.plan()?;
    plan.horizon = Some(req.h * req.num_samples as f64);
    let fit = fit_order(&plan, grid).map_err(|e| e.to_string())?;
    Ok(OrderSweep {
        grid: fit.grid,
        errors: fit.errors,
        slope: fit.slope,
    })
}

pub fn rate_curve(m: f64, l: f64, points: usize) -> Result<RateCurve, String> {
    let best_step = 2.0 / (m + l);
    let best_rate = contraction_rate(m, l, best_step).map_err(|e| e.to_string())?;
    let n = points.max(2);
    let steps: Vec<f64> = (1..n).map(|i| 2.0 / l * i as f64 / n as f64).collect();
    let rates = steps
        .iter()
        .map(|s| contraction_rate(m, l, *s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(RateCurve {
        steps,
        rates,
        best_step,
        best_rate,
    })
}

fn respond<T: Serialize>(result: Result<T, String>) -> Result<String, JsValue> {
    result
        .and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

fn parse(request: &str) -> Result<Request, String> {
    serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))
}

/// Runs one tracking experiment; returns the trajectory and headline metrics.
#[wasm_bindgen]
pub fn simulate(request: &str) -> Result<String, JsValue> {
    respond(parse(request).and_then(|r| simulate_request(&r)))
}

/// Repeats the run at each `h` of `grid` over the same time span and fits
/// the order of the asymptotic error.
#[wasm_bindgen]
pub fn order_sweep(request: &str, grid: &[f64]) -> Result<String, JsValue> {
    respond(parse(request).and_then(|r| order_sweep_request(&r, grid)))
}

/// `max{|1 − αm|, |1 − αL|}` sampled over `α ∈ (0, 2/L)`.
#[wasm_bindgen]
pub fn contraction_curve(m: f64, l: f64, points: usize) -> Result<String, JsValue> {
    respond(rate_curve(m, l, points))
}
