//! Time-parametrized costs, feasible sets and their oracles.

mod composite;
mod cost;
mod schedule;
mod set;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use composite::{soft_threshold, CompositeTerm};
pub use cost::{Drift, FnCost, QuadraticCost, TimeVaryingCost};
pub use schedule::SamplingSchedule;
pub use set::{AffineSubspace, ConvexSet, SetDescription, MEMBERSHIP_TOL};
pub use validate::{validate_instance, ProbeReport, ValidationReport};

use crate::{Error, Result, Vector};

/// Bounds on higher derivatives of the cost, when known.
///
/// `c0` bounds `‖∇tx f‖`, `c1` bounds `‖∇xxx f‖`, `c2` bounds `‖∇txx f‖` and
/// `c3` bounds `‖∇ttx f‖`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
}

#[derive(Clone)]
pub enum SetFamily {
    Fixed(ConvexSet),
    Varying(Arc<dyn Fn(f64) -> ConvexSet + Send + Sync>),
}

impl fmt::Debug for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetFamily::Fixed(s) => f.debug_tuple("Fixed").field(s).finish(),
            SetFamily::Varying(_) => f.write_str("Varying(..)"),
        }
    }
}

/// A sampled time-varying problem `min_{x ∈ X(t)} f(x; t) + g(x)`.
///
/// `m` and `L` are the strong convexity and smoothness moduli of `f`, uniform
/// in time.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    cost: Arc<dyn TimeVaryingCost>,
    sets: SetFamily,
    composite: CompositeTerm,
    strong_convexity: f64,
    smoothness: f64,
    rates: RateConstants,
}

impl ProblemInstance {
    pub fn new(
        cost: impl TimeVaryingCost + 'static,
        strong_convexity: f64,
        smoothness: f64,
    ) -> Result<Self> {
        Self::from_shared(Arc::new(cost), strong_convexity, smoothness)
    }

    pub fn from_shared(
        cost: Arc<dyn TimeVaryingCost>,
        strong_convexity: f64,
        smoothness: f64,
    ) -> Result<Self> {
        if cost.dimension() == 0 {
            return Err(Error::InvalidInput("problem dimension must be positive".into()));
        }
        if !(smoothness > 0.0) || !smoothness.is_finite() {
            return Err(Error::InvalidInput(format!(
                "smoothness L must be positive, got {smoothness}"
            )));
        }
        if !(strong_convexity >= 0.0) || strong_convexity > smoothness {
            return Err(Error::InvalidInput(format!(
                "need 0 <= m <= L, got m = {strong_convexity}, L = {smoothness}"
            )));
        }
        Ok(Self {
            cost,
            sets: SetFamily::Fixed(ConvexSet::FreeSpace),
            composite: CompositeTerm::None,
            strong_convexity,
            smoothness,
            rates: RateConstants::default(),
        })
    }

    pub fn with_set(mut self, set: ConvexSet) -> Result<Self> {
        if let Some(n) = set.dimension() {
            if n != self.dimension() {
                return Err(Error::InvalidInput(format!(
                    "set has dimension {n}, problem has dimension {}",
                    self.dimension()
                )));
            }
        }
        if !set.is_free() && !self.composite.is_none() {
            return Err(Error::Config(
                "a composite term requires an unconstrained feasible set".into(),
            ));
        }
        self.sets = SetFamily::Fixed(set);
        Ok(self)
    }

    /// Feasible set that changes with time; sampled once per sample time.
    pub fn with_set_family(
        mut self,
        family: impl Fn(f64) -> ConvexSet + Send + Sync + 'static,
    ) -> Result<Self> {
        if !self.composite.is_none() {
            return Err(Error::Config(
                "a composite term requires an unconstrained feasible set".into(),
            ));
        }
        self.sets = SetFamily::Varying(Arc::new(family));
        Ok(self)
    }

    pub fn with_composite(mut self, composite: CompositeTerm) -> Result<Self> {
        let free = matches!(&self.sets, SetFamily::Fixed(s) if s.is_free());
        if !composite.is_none() && !free {
            return Err(Error::Config(
                "a composite term requires an unconstrained feasible set".into(),
            ));
        }
        if let CompositeTerm::Indicator(set) = &composite {
            if set.dimension().is_some_and(|n| n != self.dimension()) {
                return Err(Error::InvalidInput("indicator set dimension mismatch".into()));
            }
        }
        self.composite = composite;
        Ok(self)
    }

    pub fn with_rates(mut self, rates: RateConstants) -> Self {
        self.rates = rates;
        self
    }

    pub fn dimension(&self) -> usize {
        self.cost.dimension()
    }

    pub fn cost(&self) -> &dyn TimeVaryingCost {
        self.cost.as_ref()
    }

    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn rates(&self) -> &RateConstants {
        &self.rates
    }

    pub fn composite(&self) -> &CompositeTerm {
        &self.composite
    }

    pub fn set_family(&self) -> &SetFamily {
        &self.sets
    }

    pub fn feasible_set(&self, t: f64) -> ConvexSet {
        match &self.sets {
            SetFamily::Fixed(s) => s.clone(),
            SetFamily::Varying(f) => f(t),
        }
    }

    /// `f(x; t) + g(x)`.
    pub fn objective(&self, x: &Vector, t: f64) -> f64 {
        self.cost.value(x, t) + self.composite.value(x)
    }

    /// The backward half of a forward-backward step: the prox of `g` when a
    /// composite term is present, otherwise the projection onto `set`.
    pub fn backward_step(&self, v: &Vector, step: f64, set: &ConvexSet) -> Result<Vector> {
        if self.composite.is_none() {
            set.project(v)
        } else {
            self.composite.prox(v, step)
        }
    }

    /// `‖T(x) − x‖` for the projected-gradient (or forward-backward) map `T`
    /// with stepsize `step`; zero exactly at a minimizer.
    pub fn fixed_point_residual(&self, x: &Vector, t: f64, step: f64) -> Result<f64> {
        let set = self.feasible_set(t);
        let y = self.backward_step(&(x - self.cost.gradient(x, t) * step), step, &set)?;
        Ok((y - x).norm())
    }
}
