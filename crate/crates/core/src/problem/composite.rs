use crate::problem::set::all_finite;
use crate::{ConvexSet, Error, Result, Vector};

/// Nonsmooth term `g` added to the smooth cost in forward-backward splitting.
#[derive(Clone, Debug, Default)]
pub enum CompositeTerm {
    #[default]
    None,
    /// `λ ‖x‖₁`
    L1 { weight: f64 },
    /// Indicator of a convex set.
    Indicator(ConvexSet),
}

impl CompositeTerm {
    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidInput(format!(
                "l1 weight must be nonnegative and finite, got {weight}"
            )));
        }
        Ok(CompositeTerm::L1 { weight })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, CompositeTerm::None)
    }

    /// `argmin_x g(x) + ‖x − v‖² / (2σ)`.
    pub fn prox(&self, v: &Vector, sigma: f64) -> Result<Vector> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "prox parameter must be positive, got {sigma}"
            )));
        }
        if !all_finite(v.as_slice()) {
            return Err(Error::InvalidInput("prox of a non-finite point".into()));
        }
        Ok(match self {
            CompositeTerm::None => v.clone(),
            CompositeTerm::L1 { weight } => soft_threshold(v, sigma * weight),
            CompositeTerm::Indicator(set) => set.project(v)?,
        })
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            CompositeTerm::None => 0.0,
            CompositeTerm::L1 { weight } => weight * x.lp_norm(1),
            CompositeTerm::Indicator(set) => {
                if set.contains(x, crate::problem::MEMBERSHIP_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

pub fn soft_threshold(v: &Vector, threshold: f64) -> Vector {
    v.map(|x| x.signum() * (x.abs() - threshold).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn l1_soft_thresholds() {
        let g = CompositeTerm::l1(1.0).unwrap();
        assert_eq!(g.prox(&v(&[2.0, -0.5]), 1.0).unwrap(), v(&[1.0, 0.0]));
    }

    #[test]
    fn none_is_identity() {
        assert_eq!(
            CompositeTerm::None.prox(&v(&[3.0, 3.0]), 0.7).unwrap(),
            v(&[3.0, 3.0])
        );
    }

    #[test]
    fn indicator_ignores_sigma() {
        let set = ConvexSet::boxed(v(&[0.0]), v(&[1.0])).unwrap();
        let g = CompositeTerm::Indicator(set);
        assert_eq!(g.prox(&v(&[-2.0]), 5.0).unwrap(), v(&[0.0]));
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        for s in [0.0, -1.0, f64::NAN] {
            assert!(CompositeTerm::None.prox(&v(&[1.0]), s).is_err());
        }
        assert!(CompositeTerm::l1(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn soft_threshold_sign_and_magnitude(
            x in prop::collection::vec(-5.0..5.0f64, 1..6),
            weight in 0.0..2.0f64,
            sigma in 0.01..3.0f64,
        ) {
            let x = Vector::from_vec(x);
            let p = CompositeTerm::l1(weight).unwrap().prox(&x, sigma).unwrap();
            for (pi, xi) in p.iter().zip(x.iter()) {
                prop_assert!(*pi == 0.0 || pi.signum() == xi.signum());
                prop_assert!((pi.abs() - (xi.abs() - sigma * weight).max(0.0)).abs() < 1e-15);
                // (v - prox)/σ must be a subgradient of λ|·| at prox.
                let sub = (xi - pi) / sigma;
                if *pi != 0.0 {
                    prop_assert!((sub - weight * pi.signum()).abs() < 1e-12);
                } else {
                    prop_assert!(sub.abs() <= weight + 1e-12);
                }
            }
        }
    }
}
