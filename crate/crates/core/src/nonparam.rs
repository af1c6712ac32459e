//! Rank- and sign-based private testers built on disjoint random pairs.
//!
//! Both testers turn rows into pair slopes where every row belongs to at most
//! one pair, so changing one row moves at most one slope.

use serde::{Deserialize, Serialize};

use crate::dist::normal_quantile;
use crate::error::{Error, Result};
use crate::linmodel::{Dataset, GroupedDataset};
use crate::montecarlo::{mc_test, Decision, DpStatsProcedure, McConfig};
use crate::privacy::{gaussian_mech, PrivacyBudget};
use crate::rng::RandomSource;
use crate::suffstat::ThetaPair;

/// Sensitivity of the sign count: one row flips at most one indicator.
pub const BERNOULLI_SENSITIVITY: f64 = 1.0;
/// Sensitivity of the two-group rank statistic `h`.
pub const KW_SENSITIVITY: f64 = 8.0;
/// Support of the uniform null sampler for the rank test.
pub const KW_NULL_INTERVAL: (f64, f64) = (-5.0, 5.0);

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSlopes {
    pub slopes: Vec<f64>,
    pub pairs_used: usize,
    /// Row indices of each pair, in slope order.
    pub pairs: Vec<(usize, usize)>,
}

fn slope(x: &[f64], y: &[f64], a: usize, b: usize) -> f64 {
    (y[b] - y[a]) / (x[b] - x[a])
}

/// Pairs `τ(i)` with `τ(⌊n/2⌋ + i)`. Pairs with equal `x` get slope `NaN`.
pub fn pair_by_permutation(x: &[f64], y: &[f64], tau: &[usize]) -> PairedSlopes {
    let ns = tau.len() / 2;
    let pairs: Vec<(usize, usize)> = (0..ns).map(|i| (tau[i], tau[ns + i])).collect();
    let slopes = pairs
        .iter()
        .map(|&(a, b)| {
            if x[a] == x[b] {
                f64::NAN
            } else {
                slope(x, y, a, b)
            }
        })
        .collect();
    PairedSlopes {
        slopes,
        pairs_used: ns,
        pairs,
    }
}

/// Number of positive pair slopes; undefined slopes (equal `x`) are coin flips.
pub fn positive_count(p: &PairedSlopes, rng: &mut RandomSource) -> usize {
    p.slopes
        .iter()
        .filter(|s| if s.is_nan() { rng.coin() } else { **s > 0.0 })
        .count()
}

/// Noisy count of positive slopes over a fresh random pairing.
pub fn dp_bernoulli_count(
    d: &Dataset,
    budget: PrivacyBudget,
    rng: &mut RandomSource,
) -> (f64, usize) {
    let tau = rng.permutation(d.n());
    let pairs = pair_by_permutation(d.x(), d.y(), &tau);
    let s = positive_count(&pairs, rng) as f64;
    (
        gaussian_mech(s, BERNOULLI_SENSITIVITY, budget, rng),
        pairs.pairs_used,
    )
}

/// Two-sided sign test: under no linear relationship each pair slope is
/// positive with probability 1/2. Rejects when the noisy count leaves the
/// central `1 − α` region of `N(n_s/2, n_s/4 + 1/(2ρ))`.
pub fn bernoulli_test(
    d: &Dataset,
    budget: PrivacyBudget,
    alpha: f64,
    rng: &mut RandomSource,
) -> Result<Decision> {
    if d.n() < 2 {
        return Err(Error::InsufficientSamples { got: d.n(), min: 2 });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let (noisy, ns) = dp_bernoulli_count(d, budget, rng);
    let ns = ns as f64;
    let sd = (ns / 4.0 + 1.0 / (2.0 * budget.rho())).sqrt();
    let lo = normal_quantile(alpha / 2.0, ns / 2.0, sd);
    let hi = normal_quantile(1.0 - alpha / 2.0, ns / 2.0, sd);
    Ok(Decision::interval_test(noisy, lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwStatistic {
    pub h: f64,
    pub h_noisy: f64,
    pub m1: usize,
    pub m2: usize,
}

/// One-based ranks with ties replaced by their average position.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        // positions i..j (zero-based) share the rank (i+1 + j)/2
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Pre-noise statistic `h = 4(m−1)/m² · Σ m_g |r̄_g − (m+1)/2|` over the
/// pooled slopes; `h_noisy` is left equal to `h`.
pub fn kw_statistic(s1: &[f64], s2: &[f64]) -> KwStatistic {
    let (m1, m2) = (s1.len(), s2.len());
    assert!(m1 >= 1 && m2 >= 1, "each group needs at least one slope");
    let pooled: Vec<f64> = s1.iter().chain(s2).copied().collect();
    let ranks = midranks(&pooled);
    let m = (m1 + m2) as f64;
    let center = (m + 1.0) / 2.0;
    let r1 = ranks[..m1].iter().sum::<f64>() / m1 as f64;
    let r2 = ranks[m1..].iter().sum::<f64>() / m2 as f64;
    let h = 4.0 * (m - 1.0) / (m * m)
        * (m1 as f64 * (r1 - center).abs() + m2 as f64 * (r2 - center).abs());
    KwStatistic {
        h,
        h_noisy: h,
        m1,
        m2,
    }
}

/// Disjoint random pairing inside one group. The permuted `j`-th row is paired
/// with the `(j + ⌊n/2⌋)`-th; an odd leftover is dropped. A pair with equal `x`
/// is re-paired once against a random leftover row, otherwise dropped.
pub fn pair_group_slopes(x: &[f64], y: &[f64], rng: &mut RandomSource) -> PairedSlopes {
    let tau = rng.permutation(x.len());
    let half = x.len() / 2;
    let mut pool: Vec<usize> = tau[2 * half..].to_vec();
    let mut pairs = Vec::with_capacity(half);
    let mut slopes = Vec::with_capacity(half);
    for j in 0..half {
        let (a, b) = (tau[j], tau[j + half]);
        if x[a] != x[b] {
            pairs.push((a, b));
            slopes.push(slope(x, y, a, b));
            continue;
        }
        if !pool.is_empty() {
            let k = rng.index(pool.len());
            let c = pool[k];
            if x[c] != x[a] {
                pool[k] = b;
                pairs.push((a, c));
                slopes.push(slope(x, y, a, c));
                continue;
            }
        }
        pool.push(a);
        pool.push(b);
    }
    PairedSlopes {
        pairs_used: pairs.len(),
        slopes,
        pairs,
    }
}

/// Private two-group rank statistic: `h + N(0, 8²/(2ρ))`. `None` when a group
/// ends up without any usable pair.
pub fn dp_kw(
    g: &GroupedDataset,
    budget: PrivacyBudget,
    rng: &mut RandomSource,
) -> Option<KwStatistic> {
    let (x1, y1) = g.group1();
    let (x2, y2) = g.group2();
    let p1 = pair_group_slopes(x1, y1, rng);
    let p2 = pair_group_slopes(x2, y2, rng);
    if p1.slopes.is_empty() || p2.slopes.is_empty() {
        return None;
    }
    let mut stat = kw_statistic(&p1.slopes, &p2.slopes);
    stat.h_noisy = gaussian_mech(stat.h, KW_SENSITIVITY, budget, rng);
    Some(stat)
}

/// The rank test as a Monte Carlo procedure. Its null bundle carries only the
/// group sizes; the statistic is `h_noisy` itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub budget: PrivacyBudget,
}

impl DpStatsProcedure for KruskalWallis {
    type Data = GroupedDataset;
    type Null = (usize, usize);
    type Alt = KwStatistic;

    fn dp_stats(
        &self,
        data: &GroupedDataset,
        rng: &mut RandomSource,
    ) -> ThetaPair<(usize, usize), KwStatistic> {
        match dp_kw(data, self.budget, rng) {
            Some(alt) => ThetaPair::Released {
                null: (data.n1(), data.n2()),
                alt,
            },
            None => ThetaPair::Bottom,
        }
    }

    fn statistic(&self, alt: &KwStatistic) -> Result<f64> {
        Ok(alt.h_noisy)
    }

    fn sample_null(&self, &(n1, n2): &(usize, usize), rng: &mut RandomSource) -> GroupedDataset {
        let (lo, hi) = KW_NULL_INTERVAL;
        let n = n1 + n2;
        let x = (0..n).map(|_| rng.uniform(lo, hi)).collect();
        let y = (0..n).map(|_| rng.uniform(lo, hi)).collect();
        GroupedDataset::new(Dataset::from_parts_unchecked(x, y), n1)
            .expect("null sizes come from a valid grouping")
    }
}

/// Tests whether the two groups share a slope, using the private rank statistic.
pub fn kw_test(
    g: &GroupedDataset,
    budget: PrivacyBudget,
    cfg: &McConfig,
    rng: &mut RandomSource,
) -> Result<Decision> {
    let smallest = g.n1().min(g.n2());
    if smallest < 2 {
        return Err(Error::InsufficientSamples {
            got: smallest,
            min: 2,
        });
    }
    Ok(mc_test(g, &KruskalWallis { budget }, cfg, rng))
}
