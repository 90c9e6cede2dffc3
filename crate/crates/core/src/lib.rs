//! Solvers for time-varying convex optimization problems
//!
//! ```text
//! minimize f(x; t)  subject to  x ∈ X(t)
//! ```
//!
//! sampled at `t_k = t0 + k h`. Two families of online algorithms are provided:
//!
//! * **Running** (correction-only) methods warm-start from the previous iterate and
//!   apply `C` iterations of a static method to each newly sampled problem:
//!   projected gradient, proximal point, forward-backward splitting and dual ascent.
//!   See [`running`].
//! * **Prediction-correction** methods first extrapolate the optimizer with a
//!   Taylor expansion of the optimality conditions, then correct on the new
//!   sample. See [`prediction`].
//!
//! Benchmark problems with known optimizer trajectories live in [`oracle`], and
//! [`metrics`] turns completed runs into tracking-error statistics, contraction
//! checks and order-in-`h` fits. [`experiment`] is the file-driven front end used
//! by the `tvopt` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod prediction;
pub mod problem;
pub mod record;
pub mod running;

pub use error::{Error, Result};
pub use metrics::{MetricsReport, OrderFit};
pub use oracle::{BenchmarkParams, BenchmarkProblem};
pub use prediction::{PredictionConfig, PredictionMode, QuadraticModel};
pub use problem::{
    CompositeTerm, ConvexSet, ProblemInstance, QuadraticCost, SamplingSchedule, TimeVaryingCost,
};
pub use record::TrajectoryRecord;
pub use running::{EvalCounts, Method, SolverConfig};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Iterates whose norm exceeds this are treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;
