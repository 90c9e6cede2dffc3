use std::fmt;
use std::sync::Arc;

use nalgebra::linalg::Cholesky;
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result, Vector};

/// Smooth cost `f(x; t)` with its derivative oracles.
///
/// Implementations must be pure in `(x, t)`.
pub trait TimeVaryingCost: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    fn value(&self, x: &Vector, t: f64) -> f64;

    fn gradient(&self, x: &Vector, t: f64) -> Vector;

    fn hessian(&self, _x: &Vector, _t: f64) -> Option<Matrix> {
        None
    }

    /// Time derivative of the gradient, `∇tx f(x; t)`.
    fn gradient_time_derivative(&self, _x: &Vector, _t: f64) -> Option<Vector> {
        None
    }

    /// Closed-form `argmin_x f(x; t) + ‖x − v‖² / (2 step)`, when one exists.
    fn proximal_step(&self, _v: &Vector, _step: f64, _t: f64) -> Option<Vector> {
        None
    }

    /// Closed-form `argmin_x f(x; t) + λᵀ A x`, when one exists.
    fn lagrangian_minimizer(&self, _a: &Matrix, _lambda: &Vector, _t: f64) -> Option<Vector> {
        None
    }
}

/// One coordinate of a time-varying linear term:
/// `offset + slope·t + amplitude·sin(frequency·t + phase)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Drift {
    pub offset: f64,
    pub slope: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Drift {
    pub fn constant(offset: f64) -> Self {
        Drift {
            offset,
            ..Default::default()
        }
    }

    pub fn sinusoid(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Drift {
            amplitude,
            frequency,
            phase,
            ..Default::default()
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.offset + self.slope * t + self.amplitude * (self.frequency * t + self.phase).sin()
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.slope + self.amplitude * self.frequency * (self.frequency * t + self.phase).cos()
    }

    pub fn second_rate(&self, t: f64) -> f64 {
        -self.amplitude * self.frequency * self.frequency * (self.frequency * t + self.phase).sin()
    }
}

/// `f(x; t) = ½ xᵀ Q x + ℓ(t)ᵀ x + κ(t)` with a constant symmetric `Q`.
///
/// `κ(t)` only shifts cost values; it is chosen so that benchmark costs of the
/// form `½‖x − r(t)‖²` report their natural values.
#[derive(Clone)]
pub struct QuadraticCost {
    q: Matrix,
    linear: Vec<Drift>,
    shift: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    factor: Option<Cholesky<f64, nalgebra::Dyn>>,
}

impl QuadraticCost {
    pub fn new(q: Matrix, linear: Vec<Drift>) -> Result<Self> {
        let n = q.nrows();
        if n == 0 || q.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "quadratic matrix must be square and nonempty, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if linear.len() != n {
            return Err(Error::InvalidInput(format!(
                "linear term has {} components, expected {n}",
                linear.len()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("quadratic matrix must be finite".into()));
        }
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 * q.amax().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "quadratic matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let factor = Cholesky::new(q.clone());
        Ok(Self {
            q,
            linear,
            shift: None,
            factor,
        })
    }

    /// Adds a constant-in-`x` term to the reported cost.
    pub fn with_shift(mut self, shift: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.shift = Some(Arc::new(shift));
        self
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    pub fn drifts(&self) -> &[Drift] {
        &self.linear
    }

    pub fn linear_term(&self, t: f64) -> Vector {
        Vector::from_iterator(self.linear.len(), self.linear.iter().map(|d| d.value(t)))
    }

    pub fn linear_rate(&self, t: f64) -> Vector {
        Vector::from_iterator(self.linear.len(), self.linear.iter().map(|d| d.rate(t)))
    }

    /// Symmetric eigenvalue range `(min, max)` of `Q`.
    pub fn eigen_range(&self) -> (f64, f64) {
        let eig = self.q.clone().symmetric_eigenvalues();
        (eig.min(), eig.max())
    }

    /// Unconstrained minimizer `−Q⁻¹ ℓ(t)`; `None` if `Q` is singular.
    pub fn unconstrained_minimizer(&self, t: f64) -> Option<Vector> {
        self.factor.as_ref().map(|f| -f.solve(&self.linear_term(t)))
    }
}

impl fmt::Debug for QuadraticCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticCost")
            .field("q", &self.q)
            .field("linear", &self.linear)
            .finish_non_exhaustive()
    }
}

impl TimeVaryingCost for QuadraticCost {
    fn dimension(&self) -> usize {
        self.q.nrows()
    }

    fn value(&self, x: &Vector, t: f64) -> f64 {
        let shift = self.shift.as_ref().map_or(0.0, |s| s(t));
        0.5 * x.dot(&(&self.q * x)) + self.linear_term(t).dot(x) + shift
    }

    fn gradient(&self, x: &Vector, t: f64) -> Vector {
        &self.q * x + self.linear_term(t)
    }

    fn hessian(&self, _x: &Vector, _t: f64) -> Option<Matrix> {
        Some(self.q.clone())
    }

    fn gradient_time_derivative(&self, _x: &Vector, t: f64) -> Option<Vector> {
        Some(self.linear_rate(t))
    }

    fn proximal_step(&self, v: &Vector, step: f64, t: f64) -> Option<Vector> {
        let n = self.dimension();
        let lhs = &self.q + Matrix::identity(n, n) / step;
        let rhs = v / step - self.linear_term(t);
        Cholesky::new(lhs).map(|c| c.solve(&rhs))
    }

    fn lagrangian_minimizer(&self, a: &Matrix, lambda: &Vector, t: f64) -> Option<Vector> {
        let rhs = -(self.linear_term(t) + a.transpose() * lambda);
        self.factor.as_ref().map(|f| f.solve(&rhs))
    }
}

type ValueFn = dyn Fn(&Vector, f64) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&Vector, f64) -> Vector + Send + Sync;
type MatrixFn = dyn Fn(&Vector, f64) -> Matrix + Send + Sync;

/// Cost assembled from closures, for problems without a structured form.
#[derive(Clone)]
pub struct FnCost {
    dimension: usize,
    value: Arc<ValueFn>,
    gradient: Arc<VectorFn>,
    hessian: Option<Arc<MatrixFn>>,
    gradient_time_derivative: Option<Arc<VectorFn>>,
}

impl FnCost {
    pub fn new(
        dimension: usize,
        value: impl Fn(&Vector, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector, f64) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            dimension,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: None,
            gradient_time_derivative: None,
        }
    }

    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&Vector, f64) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn with_gradient_time_derivative(
        mut self,
        d: impl Fn(&Vector, f64) -> Vector + Send + Sync + 'static,
    ) -> Self {
        self.gradient_time_derivative = Some(Arc::new(d));
        self
    }
}

impl fmt::Debug for FnCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnCost")
            .field("dimension", &self.dimension)
            .field("hessian", &self.hessian.is_some())
            .field("gradient_time_derivative", &self.gradient_time_derivative.is_some())
            .finish()
    }
}

impl TimeVaryingCost for FnCost {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &Vector, t: f64) -> f64 {
        (self.value)(x, t)
    }

    fn gradient(&self, x: &Vector, t: f64) -> Vector {
        (self.gradient)(x, t)
    }

    fn hessian(&self, x: &Vector, t: f64) -> Option<Matrix> {
        self.hessian.as_ref().map(|h| h(x, t))
    }

    fn gradient_time_derivative(&self, x: &Vector, t: f64) -> Option<Vector> {
        self.gradient_time_derivative.as_ref().map(|d| d(x, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn drift_rate_matches_finite_difference() {
        let d = Drift {
            offset: 0.3,
            slope: -0.2,
            amplitude: 1.5,
            frequency: 2.0,
            phase: 0.4,
        };
        for t in [0.0, 0.7, 3.1] {
            let fd = (d.value(t + 1e-6) - d.value(t - 1e-6)) / 2e-6;
            assert_abs_diff_eq!(d.rate(t), fd, epsilon = 1e-8);
            let fd2 = (d.rate(t + 1e-6) - d.rate(t - 1e-6)) / 2e-6;
            assert_abs_diff_eq!(d.second_rate(t), fd2, epsilon = 1e-7);
        }
    }

    #[test]
    fn quadratic_closed_forms() {
        let q = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let f = QuadraticCost::new(q.clone(), vec![Drift::constant(1.0), Drift::constant(-2.0)])
            .unwrap();
        // prox: gradient of f(x) + ‖x − v‖²/(2s) vanishes at the result.
        let v = Vector::from_column_slice(&[0.3, -0.7]);
        let p = f.proximal_step(&v, 0.4, 0.0).unwrap();
        let g = f.gradient(&p, 0.0) + (&p - &v) / 0.4;
        assert!(g.norm() < 1e-12);
        // Lagrangian minimizer: ∇f(x) + Aᵀλ = 0.
        let a = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let lam = Vector::from_column_slice(&[0.25]);
        let x = f.lagrangian_minimizer(&a, &lam, 0.0).unwrap();
        assert!((f.gradient(&x, 0.0) + a.transpose() * lam).norm() < 1e-12);
        let xs = f.unconstrained_minimizer(0.0).unwrap();
        assert!(f.gradient(&xs, 0.0).norm() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_matrix() {
        let q = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(QuadraticCost::new(q, vec![Drift::default(); 2]).is_err());
    }
}
