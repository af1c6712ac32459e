//! Sufficient-statistic perturbation for the two F-statistic testers.
//!
//! Each procedure clips the rows, releases the needed moments through the
//! Gaussian mechanism at an equal share of the budget, and post-processes
//! them into a null bundle (used to simulate the null) and an alternative
//! bundle (used for the test statistic). When a private variance comes out
//! non-positive the procedure returns [`ThetaPair::Bottom`], which testers
//! turn into a fail-to-reject.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::{rss_linear, rss_through_origin, Dataset, GroupedDataset, SuffStatsRaw};
use crate::privacy::{gaussian_mech, ClipBound, PrivacyBudget};
use crate::rng::RandomSource;

/// Number of Gaussian releases made by [`dp_stats_linear`].
pub const LINEAR_RELEASES: usize = 5;
/// Number of Gaussian releases made by [`dp_stats_mixture`].
pub const MIXTURE_RELEASES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThetaPair<N, A> {
    Bottom,
    Released { null: N, alt: A },
}

impl<N, A> ThetaPair<N, A> {
    pub fn is_bottom(&self) -> bool {
        matches!(self, ThetaPair::Bottom)
    }

    pub fn released(&self) -> Option<(&N, &A)> {
        match self {
            ThetaPair::Bottom => None,
            ThetaPair::Released { null, alt } => Some((null, alt)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaLinearNull {
    pub beta2: f64,
    pub xbar: f64,
    pub x2bar: f64,
    pub s0_sq: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaLinearAlt {
    pub beta1: f64,
    pub xbar: f64,
    pub x2bar: f64,
    pub s_sq: f64,
    pub n: usize,
}

/// Sample averages of the rows clipped to `[−Δ, Δ]²`, so x and y lie in
/// `[−Δ, Δ]`, x² and y² in `[0, Δ²]` and xy in `[−Δ², Δ²]`.
///
/// The product is formed from the clipped coordinates rather than clipping
/// the raw product; all five averages are then moments of one dataset, so the
/// exact residual sum of squares cannot go negative.
pub fn clipped_moments(x: &[f64], y: &[f64], delta: ClipBound) -> SuffStatsRaw {
    let d = delta.delta();
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (cx, cy) = (xi.clamp(-d, d), yi.clamp(-d, d));
        sx += cx;
        sy += cy;
        sxx += cx * cx;
        sxy += cx * cy;
        syy += cy * cy;
    }
    let nf = x.len() as f64;
    SuffStatsRaw {
        xbar: sx / nf,
        ybar: sy / nf,
        x2bar: sxx / nf,
        xybar: sxy / nf,
        y2bar: syy / nf,
        n: x.len(),
    }
}

/// L2 sensitivities of the clipped averages over `n` rows, in release order
/// `(x̄, ȳ, mean x², mean xy, mean y²)`.
fn sensitivities(n: usize, delta: ClipBound) -> [f64; 5] {
    let d = delta.delta();
    let nf = n as f64;
    [
        2.0 * d / nf,
        2.0 * d / nf,
        d * d / nf,
        2.0 * d * d / nf,
        d * d / nf,
    ]
}

/// The five noisy clipped moments, each released at `ρ/5`.
pub fn noisy_moments_linear(
    d: &Dataset,
    budget: PrivacyBudget,
    delta: ClipBound,
    rng: &mut RandomSource,
) -> SuffStatsRaw {
    let share = budget.split(LINEAR_RELEASES)[0];
    let exact = clipped_moments(d.x(), d.y(), delta);
    let [sx, sy, sxx, sxy, syy] = sensitivities(d.n(), delta);
    SuffStatsRaw {
        xbar: gaussian_mech(exact.xbar, sx, share, rng),
        ybar: gaussian_mech(exact.ybar, sy, share, rng),
        x2bar: gaussian_mech(exact.x2bar, sxx, share, rng),
        xybar: gaussian_mech(exact.xybar, sxy, share, rng),
        y2bar: gaussian_mech(exact.y2bar, syy, share, rng),
        n: d.n(),
    }
}

/// Post-processes released linear moments into the two bundles.
pub fn thetas_from_linear_moments(m: &SuffStatsRaw) -> ThetaPair<ThetaLinearNull, ThetaLinearAlt> {
    let n = m.n as f64;
    let var = m.var_x();
    if !(var > 0.0) || m.n <= 2 {
        return ThetaPair::Bottom;
    }
    let beta1 = m.cov_xy() / var;
    let beta2 = (m.ybar * m.x2bar - m.xbar * m.xybar) / var;
    let df = n - 2.0;
    let s0_sq = (n * m.y2bar - 2.0 * beta2 * n * m.ybar + n * beta2 * beta2) / df;
    // β₁² multiplies mean x² in the residual identity.
    let s_sq = rss_linear(m, beta1, beta2) / df;
    if !(s0_sq.min(n * var / (n - 1.0)) > 0.0) {
        return ThetaPair::Bottom;
    }
    ThetaPair::Released {
        null: ThetaLinearNull {
            beta2,
            xbar: m.xbar,
            x2bar: m.x2bar,
            s0_sq,
            n: m.n,
        },
        alt: ThetaLinearAlt {
            beta1,
            xbar: m.xbar,
            x2bar: m.x2bar,
            s_sq,
            n: m.n,
        },
    }
}

/// ρ-zCDP private statistics for the linear-relationship test.
pub fn dp_stats_linear(
    d: &Dataset,
    budget: PrivacyBudget,
    delta: ClipBound,
    rng: &mut RandomSource,
) -> ThetaPair<ThetaLinearNull, ThetaLinearAlt> {
    thetas_from_linear_moments(&noisy_moments_linear(d, budget, delta, rng))
}

/// `β̃₁² · n · (mean x² − x̄²) / S̃²`.
pub fn private_f_stat_linear(theta: &ThetaLinearAlt) -> Result<f64> {
    let var = theta.x2bar - theta.xbar * theta.xbar;
    if !(var > 0.0) || !(theta.s_sq > 0.0) {
        return Err(Error::NonpositiveVariancePiece);
    }
    Ok(theta.beta1 * theta.beta1 * theta.n as f64 * var / theta.s_sq)
}

/// Which slope the mixture null model shares across groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NullSlope {
    /// `n₁/n · β̃₁ + n₂/n · β̃₂`.
    #[default]
    Pooled,
    /// The group-1 slope `β̃₁`.
    GroupOne,
}

/// Per-group noisy moments. Group means of y are never released.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRelease {
    pub xbar: f64,
    pub x2bar: f64,
    pub xybar: f64,
    pub y2bar: f64,
    pub n: usize,
}

impl GroupRelease {
    fn as_moments(&self) -> SuffStatsRaw {
        SuffStatsRaw {
            xbar: self.xbar,
            ybar: f64::NAN,
            x2bar: self.x2bar,
            xybar: self.xybar,
            y2bar: self.y2bar,
            n: self.n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureRelease {
    pub group1: GroupRelease,
    pub group2: GroupRelease,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaMixtureNull {
    pub slope: f64,
    pub xbar: f64,
    pub x2bar: f64,
    pub s0_sq: f64,
    pub n1: usize,
    pub n2: usize,
}

impl ThetaMixtureNull {
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaMixtureAlt {
    pub beta1: f64,
    pub beta2: f64,
    pub x2bar1: f64,
    pub x2bar2: f64,
    pub x2bar: f64,
    pub s_sq: f64,
    pub n1: usize,
    pub n2: usize,
}

impl ThetaMixtureAlt {
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }
}

/// The eight per-group noisy clipped moments, each at `ρ/8`. Release order is
/// x̄₁, x̄₂, x²₁, x²₂, xy₁, xy₂, y²₁, y²₂.
pub fn noisy_moments_mixture(
    g: &GroupedDataset,
    budget: PrivacyBudget,
    delta: ClipBound,
    rng: &mut RandomSource,
) -> MixtureRelease {
    let share = budget.split(MIXTURE_RELEASES)[0];
    let (x1, y1) = g.group1();
    let (x2, y2) = g.group2();
    let m1 = clipped_moments(x1, y1, delta);
    let m2 = clipped_moments(x2, y2, delta);
    let s1 = sensitivities(g.n1(), delta);
    let s2 = sensitivities(g.n2(), delta);

    let xbar1 = gaussian_mech(m1.xbar, s1[0], share, rng);
    let xbar2 = gaussian_mech(m2.xbar, s2[0], share, rng);
    let x2bar1 = gaussian_mech(m1.x2bar, s1[2], share, rng);
    let x2bar2 = gaussian_mech(m2.x2bar, s2[2], share, rng);
    let xybar1 = gaussian_mech(m1.xybar, s1[3], share, rng);
    let xybar2 = gaussian_mech(m2.xybar, s2[3], share, rng);
    let y2bar1 = gaussian_mech(m1.y2bar, s1[4], share, rng);
    let y2bar2 = gaussian_mech(m2.y2bar, s2[4], share, rng);
    MixtureRelease {
        group1: GroupRelease {
            xbar: xbar1,
            x2bar: x2bar1,
            xybar: xybar1,
            y2bar: y2bar1,
            n: g.n1(),
        },
        group2: GroupRelease {
            xbar: xbar2,
            x2bar: x2bar2,
            xybar: xybar2,
            y2bar: y2bar2,
            n: g.n2(),
        },
    }
}

pub fn thetas_from_mixture_release(
    r: &MixtureRelease,
    null_slope: NullSlope,
) -> ThetaPair<ThetaMixtureNull, ThetaMixtureAlt> {
    let (g1, g2) = (&r.group1, &r.group2);
    let (n1, n2) = (g1.n as f64, g2.n as f64);
    let n = n1 + n2;
    if !(g1.x2bar > 0.0 && g2.x2bar > 0.0) || g1.n + g2.n <= 2 {
        return ThetaPair::Bottom;
    }
    let (w1, w2) = (n1 / n, n2 / n);
    let xbar = w1 * g1.xbar + w2 * g2.xbar;
    let x2bar = w1 * g1.x2bar + w2 * g2.x2bar;
    let xybar = w1 * g1.xybar + w2 * g2.xybar;
    let y2bar = w1 * g1.y2bar + w2 * g2.y2bar;

    let beta1 = g1.xybar / g1.x2bar;
    let beta2 = g2.xybar / g2.x2bar;
    let pooled = w1 * beta1 + w2 * beta2;

    let df = n - 2.0;
    let s0_sq = n * (y2bar - 2.0 * pooled * xybar + pooled * pooled * x2bar) / df;
    let s_sq = (rss_through_origin(&g1.as_moments(), beta1)
        + rss_through_origin(&g2.as_moments(), beta2))
        / df;

    let var = n * (x2bar - xbar * xbar) / (n - 1.0);
    if !(s0_sq.min(var) > 0.0) {
        return ThetaPair::Bottom;
    }
    let slope = match null_slope {
        NullSlope::Pooled => pooled,
        NullSlope::GroupOne => beta1,
    };
    ThetaPair::Released {
        null: ThetaMixtureNull {
            slope,
            xbar,
            x2bar,
            s0_sq,
            n1: g1.n,
            n2: g2.n,
        },
        alt: ThetaMixtureAlt {
            beta1,
            beta2,
            x2bar1: g1.x2bar,
            x2bar2: g2.x2bar,
            x2bar,
            s_sq,
            n1: g1.n,
            n2: g2.n,
        },
    }
}

/// ρ-zCDP private statistics for the mixture test, pooled null slope.
pub fn dp_stats_mixture(
    g: &GroupedDataset,
    budget: PrivacyBudget,
    delta: ClipBound,
    rng: &mut RandomSource,
) -> ThetaPair<ThetaMixtureNull, ThetaMixtureAlt> {
    dp_stats_mixture_with(g, budget, delta, NullSlope::Pooled, rng)
}

pub fn dp_stats_mixture_with(
    g: &GroupedDataset,
    budget: PrivacyBudget,
    delta: ClipBound,
    null_slope: NullSlope,
    rng: &mut RandomSource,
) -> ThetaPair<ThetaMixtureNull, ThetaMixtureAlt> {
    thetas_from_mixture_release(&noisy_moments_mixture(g, budget, delta, rng), null_slope)
}

/// `n₁x²₁ · n₂x²₂ / (S̃² · n · x²) · (β̃₁ − β̃₂)²` on private statistics.
pub fn private_f_stat_mixture(theta: &ThetaMixtureAlt) -> Result<f64> {
    if !(theta.s_sq > 0.0 && theta.x2bar > 0.0 && theta.x2bar1 > 0.0 && theta.x2bar2 > 0.0) {
        return Err(Error::NonpositiveVariancePiece);
    }
    let w = theta.n1 as f64 * theta.x2bar1 * theta.n2 as f64 * theta.x2bar2;
    let d = theta.beta1 - theta.beta2;
    Ok(w / (theta.s_sq * theta.n() as f64 * theta.x2bar) * d * d)
}
