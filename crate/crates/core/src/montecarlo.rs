//! Monte Carlo calibration of private test statistics.
//!
//! A [`DpStatsProcedure`] bundles a private-statistics release, the statistic
//! evaluated on its alternative bundle, and a parametric null sampler driven by
//! its null bundle. [`mc_test`] runs the release on the real data, replays the
//! same release on `K` synthetic null datasets at the same budget, and rejects
//! when the real statistic is strictly above the `⌈(K+1)(1−α)⌉`-th order
//! statistic of the simulated ones.
//!
//! Simulated runs only touch synthetic data, so they spend no real privacy
//! budget; they must still use the full ρ so their noise matches the real run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::{Dataset, GroupedDataset};
use crate::privacy::{ClipBound, PrivacyBudget};
use crate::rng::RandomSource;
use crate::suffstat::{
    dp_stats_linear, dp_stats_mixture_with, private_f_stat_linear, private_f_stat_mixture,
    NullSlope, ThetaLinearAlt, ThetaLinearNull, ThetaMixtureAlt, ThetaMixtureNull, ThetaPair,
};

pub const DEFAULT_K: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    k: usize,
    alpha: f64,
}

impl McConfig {
    /// `alpha` must lie in (0, 1) and `k` must exceed `1/alpha`.
    pub fn new(k: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(k as f64 > 1.0 / alpha) {
            return Err(Error::InvalidParameter(format!(
                "K = {k} must exceed 1/alpha = {}",
                1.0 / alpha
            )));
        }
        Ok(Self { k, alpha })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Reject,
    FailToReject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    /// Statistic above the simulated order statistic.
    RankExceeded,
    RankNotExceeded,
    /// The private release was ⊥.
    BottomTheta,
    /// The private statistic could not be evaluated.
    DegenerateStat,
    /// Target value outside the interval.
    CIExclusion,
    CIInclusion,
    /// Statistic above an analytic critical value (non-private tests).
    CriticalValueExceeded,
    BelowCriticalValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub outcome: Outcome,
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    /// Acceptance interval for interval-style tests.
    pub interval: Option<(f64, f64)>,
    pub reason: Reason,
    /// Rank-based approximate p-value `(1 + #{t_k ≥ t}) / (K + 1)`; not calibrated.
    pub p_value: Option<f64>,
}

impl Decision {
    pub fn fail(reason: Reason) -> Self {
        Self {
            outcome: Outcome::FailToReject,
            statistic: None,
            threshold: None,
            interval: None,
            reason,
            p_value: None,
        }
    }

    pub fn threshold_test(statistic: f64, threshold: f64) -> Self {
        let reject = statistic > threshold;
        Self {
            outcome: if reject {
                Outcome::Reject
            } else {
                Outcome::FailToReject
            },
            statistic: Some(statistic),
            threshold: Some(threshold),
            interval: None,
            reason: if reject {
                Reason::CriticalValueExceeded
            } else {
                Reason::BelowCriticalValue
            },
            p_value: None,
        }
    }

    /// Rejects when `value` is not strictly inside `(lo, hi)`.
    pub fn interval_test(value: f64, lo: f64, hi: f64) -> Self {
        let inside = lo < value && value < hi;
        Self {
            outcome: if inside {
                Outcome::FailToReject
            } else {
                Outcome::Reject
            },
            statistic: Some(value),
            threshold: None,
            interval: Some((lo, hi)),
            reason: if inside {
                Reason::CIInclusion
            } else {
                Reason::CIExclusion
            },
            p_value: None,
        }
    }

    pub fn rejected(&self) -> bool {
        self.outcome == Outcome::Reject
    }
}

// ⌈x⌉ that treats values within rounding error of an integer as that integer,
// so (K+1)(1−α) = 19.000000000000004 still gives 19.
fn ceil_index(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// One-based rank `r = ⌈(K+1)(1−α)⌉` of the simulated critical value.
pub fn upper_rank(k: usize, alpha: f64) -> usize {
    ceil_index((k + 1) as f64 * (1.0 - alpha)).clamp(1, k)
}

/// One-based ranks `(⌈(K+1)α/2⌉, ⌈(K+1)(1−α/2)⌉)` of a percentile interval.
pub fn interval_ranks(k: usize, alpha: f64) -> (usize, usize) {
    let lo = ceil_index((k + 1) as f64 * alpha / 2.0).clamp(1, k);
    let hi = ceil_index((k + 1) as f64 * (1.0 - alpha / 2.0)).clamp(1, k);
    (lo, hi)
}

/// A private release plus the statistic and null model that calibrate it.
pub trait DpStatsProcedure: Sync {
    type Data: Send + Sync;
    type Null: Sync;
    type Alt;

    fn dp_stats(
        &self,
        data: &Self::Data,
        rng: &mut RandomSource,
    ) -> ThetaPair<Self::Null, Self::Alt>;

    fn statistic(&self, alt: &Self::Alt) -> Result<f64>;

    fn sample_null(&self, null: &Self::Null, rng: &mut RandomSource) -> Self::Data;
}

/// Runs the release on the real data and calibrates by simulation.
pub fn mc_test<P: DpStatsProcedure>(
    data: &P::Data,
    procedure: &P,
    cfg: &McConfig,
    rng: &mut RandomSource,
) -> Decision {
    let (null, alt) = match procedure.dp_stats(data, rng) {
        ThetaPair::Bottom => return Decision::fail(Reason::BottomTheta),
        ThetaPair::Released { null, alt } => (null, alt),
    };
    let t = match procedure.statistic(&alt) {
        Ok(t) if t.is_finite() => t,
        _ => return Decision::fail(Reason::DegenerateStat),
    };
    let sims = simulate_null(procedure, &null, cfg.k, rng);
    rank_decision(t, sims, cfg.alpha)
}

/// `K` statistics from the null model; ⊥ or undefined runs count as −∞.
pub fn simulate_null<P: DpStatsProcedure>(
    procedure: &P,
    null: &P::Null,
    k: usize,
    rng: &mut RandomSource,
) -> Vec<f64> {
    let base = rng.fork();
    (0..k)
        .into_par_iter()
        .map(|i| {
            let mut r = base.substream(i as u64);
            let synthetic = procedure.sample_null(null, &mut r);
            match procedure.dp_stats(&synthetic, &mut r) {
                ThetaPair::Released { alt, .. } => match procedure.statistic(&alt) {
                    Ok(t) if !t.is_nan() => t,
                    _ => f64::NEG_INFINITY,
                },
                ThetaPair::Bottom => f64::NEG_INFINITY,
            }
        })
        .collect()
}

pub fn rank_decision(statistic: f64, mut sims: Vec<f64>, alpha: f64) -> Decision {
    assert!(!sims.is_empty(), "no simulated statistics");
    sims.sort_by(f64::total_cmp);
    let k = sims.len();
    let threshold = sims[upper_rank(k, alpha) - 1];
    let at_least = sims.iter().filter(|&&s| s >= statistic).count();
    let reject = statistic > threshold;
    Decision {
        outcome: if reject {
            Outcome::Reject
        } else {
            Outcome::FailToReject
        },
        statistic: Some(statistic),
        threshold: Some(threshold),
        interval: None,
        reason: if reject {
            Reason::RankExceeded
        } else {
            Reason::RankNotExceeded
        },
        p_value: Some((1 + at_least) as f64 / (k + 1) as f64),
    }
}

/// Null model of the linear test: `x ~ N(x̄, n(mean x² − x̄²)/(n−1))`,
/// `y = β₂ + e` with `e ~ N(0, S₀²)`.
pub fn null_sampler_linear(theta: &ThetaLinearNull, rng: &mut RandomSource) -> Dataset {
    let n = theta.n as f64;
    let x_sd = (n * (theta.x2bar - theta.xbar * theta.xbar) / (n - 1.0)).sqrt();
    let e_sd = theta.s0_sq.sqrt();
    let x = (0..theta.n).map(|_| rng.normal(theta.xbar, x_sd)).collect();
    let y = (0..theta.n)
        .map(|_| theta.beta2 + rng.normal(0.0, e_sd))
        .collect();
    Dataset::from_parts_unchecked(x, y)
}

/// Null model of the mixture test: both groups share `slope`;
/// `x ~ N(x̄, n(mean x² − x̄²)/(n−1))`, `y = slope·x + e`, `e ~ N(0, S₀²)`.
pub fn null_sampler_mixture(theta: &ThetaMixtureNull, rng: &mut RandomSource) -> GroupedDataset {
    let n = theta.n();
    let nf = n as f64;
    let x_sd = (nf * (theta.x2bar - theta.xbar * theta.xbar) / (nf - 1.0)).sqrt();
    let e_sd = theta.s0_sq.sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = rng.normal(theta.xbar, x_sd);
        x.push(xi);
        y.push(theta.slope * xi + rng.normal(0.0, e_sd));
    }
    GroupedDataset::new(Dataset::from_parts_unchecked(x, y), theta.n1)
        .expect("null sizes come from a valid grouping")
}

/// Private F test for a linear relationship.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFProcedure {
    pub budget: PrivacyBudget,
    pub delta: ClipBound,
}

impl DpStatsProcedure for LinearFProcedure {
    type Data = Dataset;
    type Null = ThetaLinearNull;
    type Alt = ThetaLinearAlt;

    fn dp_stats(
        &self,
        data: &Dataset,
        rng: &mut RandomSource,
    ) -> ThetaPair<ThetaLinearNull, ThetaLinearAlt> {
        dp_stats_linear(data, self.budget, self.delta, rng)
    }

    fn statistic(&self, alt: &ThetaLinearAlt) -> Result<f64> {
        private_f_stat_linear(alt)
    }

    fn sample_null(&self, null: &ThetaLinearNull, rng: &mut RandomSource) -> Dataset {
        null_sampler_linear(null, rng)
    }
}

/// Private F test for a two-line mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureFProcedure {
    pub budget: PrivacyBudget,
    pub delta: ClipBound,
    pub null_slope: NullSlope,
}

impl DpStatsProcedure for MixtureFProcedure {
    type Data = GroupedDataset;
    type Null = ThetaMixtureNull;
    type Alt = ThetaMixtureAlt;

    fn dp_stats(
        &self,
        data: &GroupedDataset,
        rng: &mut RandomSource,
    ) -> ThetaPair<ThetaMixtureNull, ThetaMixtureAlt> {
        dp_stats_mixture_with(data, self.budget, self.delta, self.null_slope, rng)
    }

    fn statistic(&self, alt: &ThetaMixtureAlt) -> Result<f64> {
        private_f_stat_mixture(alt)
    }

    fn sample_null(&self, null: &ThetaMixtureNull, rng: &mut RandomSource) -> GroupedDataset {
        null_sampler_mixture(null, rng)
    }
}

/// Private slope test by parametric-bootstrap interval: reject when `target`
/// falls outside the percentile interval of `K` draws from
/// `N(β̃₁, S̃² / (n·mean x² − n·x̄²))`.
pub fn ci_bootstrap_test(
    d: &Dataset,
    budget: PrivacyBudget,
    delta: ClipBound,
    cfg: &McConfig,
    target: f64,
    rng: &mut RandomSource,
) -> Decision {
    let alt = match dp_stats_linear(d, budget, delta, rng) {
        ThetaPair::Bottom => return Decision::fail(Reason::BottomTheta),
        ThetaPair::Released { alt, .. } => alt,
    };
    let n = alt.n as f64;
    let nvar = n * alt.x2bar - n * alt.xbar * alt.xbar;
    if !(nvar > 0.0 && alt.s_sq > 0.0) {
        return Decision::fail(Reason::DegenerateStat);
    }
    let sd = (alt.s_sq / nvar).sqrt();
    let mut slopes: Vec<f64> = (0..cfg.k).map(|_| rng.normal(alt.beta1, sd)).collect();
    slopes.sort_by(f64::total_cmp);
    let (l, r) = interval_ranks(cfg.k, cfg.alpha);
    let mut decision = Decision::interval_test(target, slopes[l - 1], slopes[r - 1]);
    decision.statistic = Some(alt.beta1);
    decision
}
