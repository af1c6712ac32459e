//! zCDP building blocks: clipping, the Gaussian mechanism and budget splitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// A ρ-zCDP budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    rho: f64,
}

impl PrivacyBudget {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must be positive and finite, got {rho}"
            )));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Splits into `k` equal parts; by composition the parts together spend `rho`.
    pub fn split(&self, k: usize) -> Vec<PrivacyBudget> {
        split_budget(*self, k)
    }
}

pub fn split_budget(budget: PrivacyBudget, k: usize) -> Vec<PrivacyBudget> {
    assert!(k >= 1, "cannot split a budget into zero parts");
    let part = PrivacyBudget {
        rho: budget.rho / k as f64,
    };
    vec![part; k]
}

/// Symmetric clip half-width Δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipBound {
    delta: f64,
}

impl ClipBound {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "clip bound must be positive and finite, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

pub fn clip(v: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi {
        return Err(Error::InvalidBounds { lo, hi });
    }
    Ok(v.max(lo).min(hi))
}

/// Variance of the Gaussian-mechanism noise for a statistic with the given
/// L2 sensitivity: `s² / (2ρ)`.
pub fn noise_variance(sensitivity: f64, budget: PrivacyBudget) -> f64 {
    sensitivity * sensitivity / (2.0 * budget.rho)
}

/// Releases `value + N(0, s²/(2ρ))`, which is ρ-zCDP for sensitivity `s`.
pub fn gaussian_mech(
    value: f64,
    sensitivity: f64,
    budget: PrivacyBudget,
    rng: &mut RandomSource,
) -> f64 {
    debug_assert!(sensitivity > 0.0);
    value + rng.privacy_noise(noise_variance(sensitivity, budget).sqrt())
}
