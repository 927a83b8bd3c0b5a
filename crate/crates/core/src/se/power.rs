use serde::{Deserialize, Serialize};

use crate::linalg::CMat;
use crate::{Error, Result};

/// Slack allowed on the trace constraint.
pub const TRACE_SLACK: f64 = 1e-12;

/// Per-antenna transmit amplitudes of one UE (the diagonal of `P_k`) and the
/// power budget they must respect: `Σ amplitude² <= budget`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub amplitudes: Vec<f64>,
    pub budget: f64,
}

impl PowerAllocation {
    pub fn new(amplitudes: Vec<f64>, budget: f64) -> Result<Self> {
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "power budget must be nonnegative, got {budget}"
            )));
        }
        if amplitudes.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "amplitudes must be finite and nonnegative: {amplitudes:?}"
            )));
        }
        let p = PowerAllocation { amplitudes, budget };
        if p.trace() > budget + TRACE_SLACK {
            return Err(Error::InvalidArgument(format!(
                "transmit power {} exceeds budget {budget}",
                p.trace()
            )));
        }
        Ok(p)
    }

    /// Spread `power` watts evenly over `n_antennas`.
    pub fn uniform(power: f64, n_antennas: usize) -> Result<Self> {
        let a = (power.max(0.0) / n_antennas as f64).sqrt();
        PowerAllocation::new(vec![a; n_antennas], power)
    }

    pub fn zero(n_antennas: usize) -> Self {
        PowerAllocation {
            amplitudes: vec![0.0; n_antennas],
            budget: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// `tr(P P^H)`, the radiated power.
    pub fn trace(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    pub fn matrix(&self) -> CMat {
        let n = self.len();
        CMat::from_fn(n, n, |i, j| if i == j { self.amplitudes[i].into() } else { 0.0.into() })
    }

    /// `P P^H`.
    pub fn gram(&self) -> CMat {
        let n = self.len();
        CMat::from_fn(n, n, |i, j| {
            if i == j {
                (self.amplitudes[i] * self.amplitudes[i]).into()
            } else {
                0.0.into()
            }
        })
    }
}

/// Per-UE spectral efficiency in bits/s/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeReport {
    pub per_ue: Vec<f64>,
    pub sum: f64,
}

impl SeReport {
    pub fn from_per_ue(per_ue: Vec<f64>) -> Self {
        let sum = per_ue.iter().sum();
        SeReport { per_ue, sum }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_is_checked() {
        assert!(PowerAllocation::new(vec![1.0, 1.0], 2.0).is_ok());
        assert!(PowerAllocation::new(vec![1.0, 1.1], 2.0).is_err());
        assert!(PowerAllocation::new(vec![-0.1], 2.0).is_err());
        let u = PowerAllocation::uniform(0.2, 4).unwrap();
        assert!((u.trace() - 0.2).abs() < 1e-15);
        assert_eq!(
            u.gram()[(1, 1)].re,
            0.05000000000000001_f64.min(u.amplitudes[1] * u.amplitudes[1])
        );
    }

    #[test]
    fn report_sums() {
        let r = SeReport::from_per_ue(vec![1.0, 2.5]);
        assert_eq!(r.sum, 3.5);
    }
}
