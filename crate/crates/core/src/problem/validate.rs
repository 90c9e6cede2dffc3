use serde::Serialize;

use super::set::all_finite;
use crate::{Error, ProblemInstance, Result, Vector};

pub const GRADIENT_REL_TOL: f64 = 1e-5;
pub const GRADIENT_TX_REL_TOL: f64 = 1e-4;
const GRADIENT_STEP: f64 = 1e-6;
const TIME_STEP: f64 = 1e-5;

/// Per-probe results of the oracle consistency checks.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub x: Vec<f64>,
    pub t: f64,
    /// `‖∇f − FD‖ / max(‖∇f‖, 1)` with central differences of the cost.
    pub gradient_error: Option<f64>,
    pub gradient_ok: bool,
    /// Same measure for `∇tx f` against central differences in time.
    pub gradient_tx_error: Option<f64>,
    pub gradient_tx_ok: Option<bool>,
    pub hessian_eigen_range: Option<(f64, f64)>,
    pub hessian_ok: Option<bool>,
    /// Set when an oracle returned a non-finite or mis-sized result.
    pub failure: Option<String>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
            && self.gradient_ok
            && self.gradient_tx_ok.unwrap_or(true)
            && self.hessian_ok.unwrap_or(true)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub strong_convexity: f64,
    pub smoothness: f64,
    pub probes: Vec<ProbeReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.probes.iter().all(ProbeReport::passed)
    }
}

/// Checks the derivative oracles of `p` against finite differences and the
/// Hessian spectrum against `[m, L]` at each probe point.
pub fn validate_instance(p: &ProblemInstance, probes: &[(Vector, f64)]) -> Result<ValidationReport> {
    if probes.is_empty() {
        return Err(Error::InvalidInput("validation needs at least one probe".into()));
    }
    let probes = probes
        .iter()
        .map(|(x, t)| probe(p, x, *t))
        .collect();
    Ok(ValidationReport {
        strong_convexity: p.strong_convexity(),
        smoothness: p.smoothness(),
        probes,
    })
}

fn probe(p: &ProblemInstance, x: &Vector, t: f64) -> ProbeReport {
    let mut report = ProbeReport {
        x: x.iter().copied().collect(),
        t,
        gradient_error: None,
        gradient_ok: false,
        gradient_tx_error: None,
        gradient_tx_ok: None,
        hessian_eigen_range: None,
        hessian_ok: None,
        failure: None,
    };
    if x.len() != p.dimension() || !all_finite(x.as_slice()) {
        report.failure = Some(format!(
            "probe point must be finite with dimension {}",
            p.dimension()
        ));
        return report;
    }
    let f = p.cost();
    let n = p.dimension();

    let g = f.gradient(x, t);
    if g.len() != n || !all_finite(g.as_slice()) {
        report.failure = Some("gradient oracle returned an invalid value".into());
        return report;
    }
    let mut fd = Vector::zeros(n);
    for i in 0..n {
        let step = GRADIENT_STEP * x[i].abs().max(1.0);
        let mut plus = x.clone();
        plus[i] += step;
        let mut minus = x.clone();
        minus[i] -= step;
        fd[i] = (f.value(&plus, t) - f.value(&minus, t)) / (plus[i] - minus[i]);
    }
    if !all_finite(fd.as_slice()) {
        report.failure = Some("cost oracle returned a non-finite value".into());
        return report;
    }
    let err = (&g - &fd).norm() / g.norm().max(1.0);
    report.gradient_error = Some(err);
    report.gradient_ok = err <= GRADIENT_REL_TOL;

    if let Some(d) = f.gradient_time_derivative(x, t) {
        let fd = (f.gradient(x, t + TIME_STEP) - f.gradient(x, t - TIME_STEP)) / (2.0 * TIME_STEP);
        if d.len() != n || !all_finite(d.as_slice()) || !all_finite(fd.as_slice()) {
            report.failure = Some("time-derivative oracle returned an invalid value".into());
            return report;
        }
        let err = (&d - fd).norm() / d.norm().max(1.0);
        report.gradient_tx_error = Some(err);
        report.gradient_tx_ok = Some(err <= GRADIENT_TX_REL_TOL);
    }

    if let Some(h) = f.hessian(x, t) {
        if h.shape() != (n, n) || !all_finite(h.as_slice()) {
            report.failure = Some("Hessian oracle returned an invalid value".into());
            return report;
        }
        let sym = (&h + h.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        let tol = 1e-9 * p.smoothness().max(1.0);
        report.hessian_eigen_range = Some((lo, hi));
        report.hessian_ok = Some(lo >= p.strong_convexity() - tol && hi <= p.smoothness() + tol);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Drift, FnCost, QuadraticCost};
    use crate::Matrix;
    use std::f64::consts::FRAC_PI_2;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    /// `½ (x − cos t)²`
    fn cosine_tracking() -> ProblemInstance {
        let f = QuadraticCost::new(
            Matrix::identity(1, 1),
            vec![Drift::sinusoid(-1.0, 1.0, FRAC_PI_2)],
        )
        .unwrap();
        ProblemInstance::new(f, 1.0, 1.0).unwrap()
    }

    #[test]
    fn identity_quadratic_passes() {
        let f = QuadraticCost::new(Matrix::identity(2, 2), vec![Drift::default(); 2]).unwrap();
        let p = ProblemInstance::new(f, 1.0, 1.0).unwrap();
        let r = validate_instance(&p, &[(v(&[1.0, 0.0]), 0.0)]).unwrap();
        assert!(r.passed());
        assert_eq!(r.probes[0].hessian_eigen_range, Some((1.0, 1.0)));
    }

    #[test]
    fn cosine_time_derivative_at_stationary_point() {
        let p = cosine_tracking();
        let r = validate_instance(&p, &[(v(&[1.0]), 0.0)]).unwrap();
        assert!(r.passed());
        let d = p.cost().gradient_time_derivative(&v(&[1.0]), 0.0).unwrap();
        assert!(d[0].abs() < 1e-15);
    }

    #[test]
    fn cosine_time_derivative_matches_central_difference() {
        let p = cosine_tracking();
        let x = v(&[0.0]);
        let d = p.cost().gradient_time_derivative(&x, FRAC_PI_2).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15);
        // Independent oracle: central difference of ∇x f = x − cos t.
        let delta = 1e-5;
        let fd = ((0.0 - (FRAC_PI_2 + delta).cos()) - (0.0 - (FRAC_PI_2 - delta).cos())) / (2.0 * delta);
        assert!((d[0] - fd).abs() <= 1e-4);
        let r = validate_instance(&p, &[(x, FRAC_PI_2)]).unwrap();
        assert!(r.probes[0].gradient_tx_ok.unwrap());
        assert!(r.probes[0].gradient_tx_error.unwrap() <= 1e-4);
    }

    #[test]
    fn wrong_metadata_fails_hessian_check() {
        let f = QuadraticCost::new(
            Matrix::from_diagonal(&v(&[1.0, 4.0])),
            vec![Drift::default(); 2],
        )
        .unwrap();
        let p = ProblemInstance::new(f, 1.0, 2.0).unwrap();
        let r = validate_instance(&p, &[(v(&[0.0, 0.0]), 0.0)]).unwrap();
        assert_eq!(r.probes[0].hessian_ok, Some(false));
        assert!(!r.passed());
    }

    #[test]
    fn inconsistent_gradient_is_flagged() {
        let f = FnCost::new(1, |x, _| 0.5 * x[0] * x[0], |x, _| x * 2.0);
        let p = ProblemInstance::new(f, 1.0, 1.0).unwrap();
        let r = validate_instance(&p, &[(v(&[1.0]), 0.0)]).unwrap();
        assert!(!r.probes[0].gradient_ok);
    }

    #[test]
    fn oracle_failure_is_reported_not_raised() {
        let f = FnCost::new(1, |_, _| f64::NAN, |x, _| x.clone());
        let p = ProblemInstance::new(f, 1.0, 1.0).unwrap();
        let r = validate_instance(&p, &[(v(&[1.0]), 0.0), (v(&[2.0]), 1.0)]).unwrap();
        assert_eq!(r.probes.len(), 2);
        assert!(r.probes.iter().all(|p| p.failure.is_some()));
    }

    #[test]
    fn empty_probe_list_is_an_error() {
        assert!(validate_instance(&cosine_tracking(), &[]).is_err());
    }
}
