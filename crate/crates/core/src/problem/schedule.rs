use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform sampling times `t_k = t0 + k h` for `k = 0..num_samples`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    t0: f64,
    h: f64,
    num_samples: usize,
}

impl SamplingSchedule {
    pub fn new(t0: f64, h: f64, num_samples: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::InvalidInput(format!("start time must be finite, got {t0}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sampling period must be positive, got {h}"
            )));
        }
        if num_samples == 0 {
            return Err(Error::InvalidInput("schedule needs at least one sample".into()));
        }
        let s = Self { t0, h, num_samples };
        // The last pair has the coarsest float spacing.
        if num_samples > 1 && !(s.time(num_samples - 1) > s.time(num_samples - 2)) {
            return Err(Error::InvalidInput(
                "sampling period too small for strictly increasing sample times".into(),
            ));
        }
        Ok(s)
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn period(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.num_samples
    }

    pub fn is_empty(&self) -> bool {
        self.num_samples == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.num_samples).map(|k| self.time(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_are_strictly_increasing() {
        let s = SamplingSchedule::new(1.0, 0.1, 50).unwrap();
        let t: Vec<f64> = s.times().collect();
        assert_eq!(t.len(), 50);
        assert_eq!(t[0], 1.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!((s.time(10) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid() {
        assert!(SamplingSchedule::new(0.0, 0.0, 10).is_err());
        assert!(SamplingSchedule::new(0.0, -0.1, 10).is_err());
        assert!(SamplingSchedule::new(0.0, 0.1, 0).is_err());
        assert!(SamplingSchedule::new(f64::NAN, 0.1, 3).is_err());
        assert!(SamplingSchedule::new(1e20, 1e-10, 3).is_err());
    }
}
