//! Non-private general-linear-model math for the two designs.
//!
//! Linear relationship: columns `(1, x)`, coefficients `(intercept, slope)`,
//! null `slope = 0`. Mixture: two groups through the origin with slopes
//! `(slope₁, slope₂)`, null `slope₁ = slope₂`. Both have `r = 2`, `q = 1`.
//!
//! Residual sums of squares are evaluated from the moment identities so the
//! private path (which only ever sees moments) shares the same formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of free parameters under the alternative.
pub const R: usize = 2;
/// Number of free parameters under the null.
pub const Q: usize = 1;

/// Paired observations; one row is the unit of privacy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidDataset(format!(
                "x has {} rows but y has {}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::InvalidDataset("no rows".into()));
        }
        if let Some(i) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            let row = i % x.len();
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {row}"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub(crate) fn from_parts_unchecked(x: Vec<f64>, y: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), y.len());
        Self { x, y }
    }
}

/// Rows `0..n1` form group 1 and the rest group 2. Group membership is public.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedDataset {
    data: Dataset,
    n1: usize,
}

impl GroupedDataset {
    pub fn new(data: Dataset, n1: usize) -> Result<Self> {
        if n1 == 0 || n1 >= data.n() {
            return Err(Error::InvalidDataset(format!(
                "group 1 size {n1} must lie strictly between 0 and n = {}",
                data.n()
            )));
        }
        Ok(Self { data, n1 })
    }

    pub fn from_groups(x1: &[f64], y1: &[f64], x2: &[f64], y2: &[f64]) -> Result<Self> {
        let x = x1.iter().chain(x2).copied().collect();
        let y = y1.iter().chain(y2).copied().collect();
        if x1.len() != y1.len() {
            return Err(Error::InvalidDataset(
                "group 1 x and y lengths differ".into(),
            ));
        }
        Self::new(Dataset::new(x, y)?, x1.len())
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.data.n() - self.n1
    }

    pub fn group1(&self) -> (&[f64], &[f64]) {
        (&self.data.x[..self.n1], &self.data.y[..self.n1])
    }

    pub fn group2(&self) -> (&[f64], &[f64]) {
        (&self.data.x[self.n1..], &self.data.y[self.n1..])
    }

    /// The same rows with the groups' roles exchanged.
    pub fn swapped(&self) -> GroupedDataset {
        let (x1, y1) = self.group1();
        let (x2, y2) = self.group2();
        GroupedDataset::from_groups(x2, y2, x1, y1).expect("swap of a valid grouping")
    }
}

/// The five sample averages `(x̄, ȳ, mean x², mean xy, mean y²)` and `n`.
///
/// Exact moments satisfy the Cauchy–Schwarz inequalities; noised ones need not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuffStatsRaw {
    pub xbar: f64,
    pub ybar: f64,
    pub x2bar: f64,
    pub xybar: f64,
    pub y2bar: f64,
    pub n: usize,
}

impl SuffStatsRaw {
    /// Biased sample variance of x, `mean x² − x̄²`.
    pub fn var_x(&self) -> f64 {
        self.x2bar - self.xbar * self.xbar
    }

    pub fn cov_xy(&self) -> f64 {
        self.xybar - self.xbar * self.ybar
    }
}

pub fn suff_stats(d: &Dataset) -> SuffStatsRaw {
    moments(d.x(), d.y())
}

pub(crate) fn moments(x: &[f64], y: &[f64]) -> SuffStatsRaw {
    let n = x.len();
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sx += xi;
        sy += yi;
        sxx += xi * xi;
        sxy += xi * yi;
        syy += yi * yi;
    }
    let nf = n as f64;
    SuffStatsRaw {
        xbar: sx / nf,
        ybar: sy / nf,
        x2bar: sxx / nf,
        xybar: sxy / nf,
        y2bar: syy / nf,
        n,
    }
}

/// Per-group moments of a grouped dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureMoments {
    pub group1: SuffStatsRaw,
    pub group2: SuffStatsRaw,
}

impl MixtureMoments {
    pub fn n(&self) -> usize {
        self.group1.n + self.group2.n
    }

    /// Pooled mean of x².
    pub fn x2bar(&self) -> f64 {
        let (w1, w2) = self.weights();
        w1 * self.group1.x2bar + w2 * self.group2.x2bar
    }

    pub fn xybar(&self) -> f64 {
        let (w1, w2) = self.weights();
        w1 * self.group1.xybar + w2 * self.group2.xybar
    }

    fn weights(&self) -> (f64, f64) {
        let n = self.n() as f64;
        (self.group1.n as f64 / n, self.group2.n as f64 / n)
    }
}

pub fn mixture_moments(g: &GroupedDataset) -> MixtureMoments {
    let (x1, y1) = g.group1();
    let (x2, y2) = g.group2();
    MixtureMoments {
        group1: moments(x1, y1),
        group2: moments(x2, y2),
    }
}

/// Least-squares fit. For the linear design `beta1` is the slope and `beta2`
/// the intercept; for the mixture design they are the two group slopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub beta1: f64,
    pub beta2: f64,
    /// Unbiased error-variance estimate, `rss / (n − 2)`.
    pub s2: f64,
    pub rss: f64,
}

/// `‖Y − Xβ‖²` for the linear design, from moments.
pub fn rss_linear(s: &SuffStatsRaw, slope: f64, intercept: f64) -> f64 {
    let n = s.n as f64;
    n * (s.y2bar - 2.0 * intercept * s.ybar - 2.0 * slope * s.xybar
        + intercept * intercept
        + 2.0 * slope * intercept * s.xbar
        + slope * slope * s.x2bar)
}

/// `Σ (y − slope·x)²` over one group through the origin, from moments.
pub fn rss_through_origin(s: &SuffStatsRaw, slope: f64) -> f64 {
    s.n as f64 * (s.y2bar - 2.0 * slope * s.xybar + slope * slope * s.x2bar)
}

// Moment identities cancel catastrophically on exact fits; anything below
// this many ulps of the total sum of squares is treated as zero.
fn clean_rss(rss: f64, scale: f64) -> f64 {
    if rss <= 64.0 * f64::EPSILON * scale {
        0.0
    } else {
        rss
    }
}

fn residual_df(n: usize) -> Result<f64> {
    if n <= R {
        return Err(Error::InvalidDataset(format!(
            "need more than {R} rows for an F test, got {n}"
        )));
    }
    Ok((n - R) as f64)
}

pub fn ols_linear(s: &SuffStatsRaw) -> Result<OlsFit> {
    let var = s.var_x();
    if var <= 0.0 || var <= 1e-14 * s.x2bar.abs() {
        return Err(Error::SingularDesign);
    }
    let beta1 = s.cov_xy() / var;
    let beta2 = (s.ybar * s.x2bar - s.xbar * s.xybar) / var;
    let rss = clean_rss(rss_linear(s, beta1, beta2), s.n as f64 * s.y2bar);
    let s2 = rss / residual_df(s.n)?;
    Ok(OlsFit {
        beta1,
        beta2,
        s2,
        rss,
    })
}

/// `T = β̂₁² · n · σ̂²ₓ / S²`, distributed `F(1, n − 2)` under the null.
pub fn f_stat_linear(fit: &OlsFit, s: &SuffStatsRaw) -> Result<f64> {
    if fit.s2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(fit.beta1 * fit.beta1 * s.n as f64 * s.var_x() / fit.s2)
}

pub fn ols_mixture(g: &GroupedDataset) -> Result<OlsFit> {
    ols_mixture_from(&mixture_moments(g))
}

pub fn ols_mixture_from(m: &MixtureMoments) -> Result<OlsFit> {
    if m.group1.x2bar <= 0.0 || m.group2.x2bar <= 0.0 {
        return Err(Error::SingularDesign);
    }
    let beta1 = m.group1.xybar / m.group1.x2bar;
    let beta2 = m.group2.xybar / m.group2.x2bar;
    let raw = rss_through_origin(&m.group1, beta1) + rss_through_origin(&m.group2, beta2);
    let scale = m.group1.n as f64 * m.group1.y2bar + m.group2.n as f64 * m.group2.y2bar;
    let rss = clean_rss(raw, scale);
    let s2 = rss / residual_df(m.n())?;
    Ok(OlsFit {
        beta1,
        beta2,
        s2,
        rss,
    })
}

/// Weighted slope-difference statistic
/// `T = n₁x²₁ · n₂x²₂ / (S² · n · x²) · (β̂₁ − β̂₂)²`, where `x²` denotes the
/// per-group and pooled means of x².
pub fn f_stat_mixture(fit: &OlsFit, m: &MixtureMoments) -> Result<f64> {
    if fit.s2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let pooled = m.x2bar();
    if pooled <= 0.0 {
        return Err(Error::SingularDesign);
    }
    let w = m.group1.n as f64 * m.group1.x2bar * m.group2.n as f64 * m.group2.x2bar;
    let d = fit.beta1 - fit.beta2;
    Ok(w / (fit.s2 * m.n() as f64 * pooled) * d * d)
}

/// `E = ((XᵀX)/n)^{1/2}`, `F = XᵀY/n`, `G = YᵀY/n` for the linear design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfgDecomposition {
    pub e: [[f64; 2]; 2],
    pub f: [f64; 2],
    pub g: f64,
}

impl EfgDecomposition {
    pub fn e_squared(&self) -> [[f64; 2]; 2] {
        mat_mul(&self.e, &self.e)
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_vec(a: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

/// Closed-form square root of `[[1, x̄], [x̄, mean x²]]`:
/// `(M + sd·I) / sqrt(trace(M) + 2·sd)` with `sd = sqrt(det M)`.
pub fn efg_decompose(s: &SuffStatsRaw) -> Result<EfgDecomposition> {
    let var = s.var_x();
    if var < 0.0 {
        return Err(Error::NegativeVariance(var));
    }
    let sd = var.sqrt();
    let scale = 1.0 / (s.x2bar + 1.0 + 2.0 * sd).sqrt();
    let e = [
        [(1.0 + sd) * scale, s.xbar * scale],
        [s.xbar * scale, (s.x2bar + sd) * scale],
    ];
    Ok(EfgDecomposition {
        e,
        f: [s.ybar, s.xybar],
        g: s.y2bar,
    })
}

/// F statistic in the `E, F, G` form:
/// `(n−r)/(r−q) · ‖√n E(β − βᴺ)‖² / (n(βᵀE²β − 2βᵀF + G))`.
///
/// Coefficient vectors are ordered like the design columns: `[intercept, slope]`.
pub fn f_stat_reformulated(
    efg: &EfgDecomposition,
    beta: [f64; 2],
    beta_null: [f64; 2],
    n: usize,
    r: usize,
    q: usize,
) -> Result<f64> {
    if q >= r || n <= r {
        return Err(Error::InvalidParameter(format!(
            "need q < r < n, got q = {q}, r = {r}, n = {n}"
        )));
    }
    let nf = n as f64;
    let diff = [beta[0] - beta_null[0], beta[1] - beta_null[1]];
    let ed = mat_vec(&efg.e, diff);
    let numerator = nf * (ed[0] * ed[0] + ed[1] * ed[1]);

    let e2b = mat_vec(&efg.e_squared(), beta);
    let quad = beta[0] * e2b[0] + beta[1] * e2b[1];
    let cross = beta[0] * efg.f[0] + beta[1] * efg.f[1];
    let denominator = nf * (quad - 2.0 * cross + efg.g);
    if !(denominator > 0.0) {
        return Err(Error::NonpositiveDenominator);
    }
    Ok((n - r) as f64 / (r - q) as f64 * numerator / denominator)
}
