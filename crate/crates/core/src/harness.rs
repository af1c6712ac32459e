//! Significance/power estimation, algorithm comparison, and the large-sample
//! convergence diagnostic.
//!
//! Trial `m` of an estimate always runs on substream `m` of a source forked
//! from the caller's, so estimates do not depend on worker scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate, GeneratorSpec, ResultRow, Sample};
use crate::dist::{ks_distance, noncentral_chi2_cdf};
use crate::error::{Error, Result};
use crate::linmodel::{f_stat_linear, ols_linear, suff_stats, Q, R};
use crate::privacy::{ClipBound, PrivacyBudget};
use crate::rng::RandomSource;
use crate::suffstat::{dp_stats_linear, private_f_stat_linear, ThetaPair};
use crate::testers::{Tester, TesterParams};

/// Produces one dataset per trial.
pub trait DataSampler: Sync {
    fn sample(&self, rng: &mut RandomSource) -> Result<Sample>;

    fn n(&self) -> usize;

    /// The generating spec, when there is one.
    fn spec(&self) -> Option<GeneratorSpec> {
        None
    }
}

impl DataSampler for GeneratorSpec {
    fn sample(&self, rng: &mut RandomSource) -> Result<Sample> {
        generate(self, rng)
    }

    fn n(&self) -> usize {
        self.n
    }

    fn spec(&self) -> Option<GeneratorSpec> {
        Some(*self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionEstimate {
    pub tester: String,
    pub n: usize,
    pub spec: Option<GeneratorSpec>,
    pub params: TesterParams,
    pub trials: usize,
    pub rejects: usize,
    pub rate: f64,
    pub stderr: f64,
}

impl RejectionEstimate {
    fn new(tester: &dyn Tester, sampler: &dyn DataSampler, trials: usize, rejects: usize) -> Self {
        let rate = rejects as f64 / trials as f64;
        Self {
            tester: tester.id().to_string(),
            n: sampler.n(),
            spec: sampler.spec(),
            params: tester.params(),
            trials,
            rejects,
            rate,
            stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
        }
    }

    pub fn to_row(&self) -> ResultRow {
        ResultRow {
            tester: self.tester.clone(),
            n: self.n,
            rho: self.params.rho,
            delta: self.params.delta,
            alpha: self.params.alpha,
            k: self.params.k,
            trials: self.trials,
            reject_rate: self.rate,
            stderr: self.stderr,
        }
    }
}

fn count_rejects(
    sampler: &dyn DataSampler,
    tester: &dyn Tester,
    base: &RandomSource,
    ids: &[u64],
) -> Result<usize> {
    ids.par_iter()
        .map(|&id| {
            let mut rng = base.substream(id);
            let data = sampler.sample(&mut rng)?;
            Ok(usize::from(tester.run(&data, &mut rng)?.rejected()))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Fraction of `trials` fresh datasets on which `tester` rejects.
pub fn estimate_rejection_prob(
    sampler: &dyn DataSampler,
    tester: &dyn Tester,
    trials: usize,
    rng: &mut RandomSource,
) -> Result<RejectionEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let base = rng.fork();
    let ids: Vec<u64> = (0..trials as u64).collect();
    let rejects = count_rejects(sampler, tester, &base, &ids)?;
    Ok(RejectionEstimate::new(tester, sampler, trials, rejects))
}

/// Every sampler crossed with every tester, sampler-major.
pub fn compare_algorithms(
    samplers: &[&dyn DataSampler],
    testers: &[&dyn Tester],
    trials: usize,
    rng: &mut RandomSource,
) -> Result<Vec<RejectionEstimate>> {
    let base = rng.fork();
    let mut out = Vec::with_capacity(samplers.len() * testers.len());
    for (i, sampler) in samplers.iter().enumerate() {
        for (j, tester) in testers.iter().enumerate() {
            let mut cell = base.substream((i * testers.len() + j) as u64);
            out.push(estimate_rejection_prob(
                *sampler, *tester, trials, &mut cell,
            )?);
        }
    }
    Ok(out)
}

pub const MIN_DIAGNOSTIC_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n: usize,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub samples: usize,
    /// Draws that returned ⊥ or an undefined statistic and were left out.
    pub dropped: usize,
    pub eta2: f64,
    pub ks_distance: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Draws `samples` independent statistics (fresh data and fresh noise each)
/// from a linear spec and measures their KS distance to `χ²₁(η²)`, with
/// `η² = β₁²·n·Var(x)/σₑ²` taken from the spec's true parameters.
///
/// `privacy = None` draws the classical statistic instead of the private one.
pub fn convergence_diagnostic(
    spec: &GeneratorSpec,
    privacy: Option<(PrivacyBudget, ClipBound)>,
    samples: usize,
    rng: &mut RandomSource,
) -> Result<ConvergenceReport> {
    if samples < MIN_DIAGNOSTIC_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples,
            min: MIN_DIAGNOSTIC_SAMPLES,
        });
    }
    if spec.mixture.is_some() {
        return Err(Error::InvalidSpec(
            "the diagnostic needs a linear spec".into(),
        ));
    }
    spec.validate()?;
    let eta2 = if spec.slope == 0.0 {
        0.0
    } else if spec.sigma_e > 0.0 {
        spec.slope * spec.slope * spec.n as f64 * spec.x_dist.variance()
            / (spec.sigma_e * spec.sigma_e)
    } else {
        return Err(Error::InvalidSpec(
            "sigma_e must be positive under the alternative".into(),
        ));
    };

    let base = rng.fork();
    let draws: Vec<Option<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|id| -> Result<Option<f64>> {
            let mut r = base.substream(id);
            let d = match generate(spec, &mut r)? {
                Sample::Linear(d) => d,
                Sample::Grouped(_) => unreachable!("linear spec"),
            };
            Ok(match privacy {
                Some((budget, delta)) => match dp_stats_linear(&d, budget, delta, &mut r) {
                    ThetaPair::Released { alt, .. } => private_f_stat_linear(&alt).ok(),
                    ThetaPair::Bottom => None,
                },
                None => {
                    let s = suff_stats(&d);
                    ols_linear(&s).and_then(|fit| f_stat_linear(&fit, &s)).ok()
                }
            })
        })
        .collect::<Result<_>>()?;
    let stats: Vec<f64> = draws.iter().flatten().copied().collect();
    if stats.is_empty() {
        return Err(Error::InsufficientSamples { got: 0, min: 1 });
    }
    let df = (R - Q) as f64;
    // T is compared with χ²_{r−q}(η²)/(r−q); with r − q = 1 the scale is 1.
    let ks = ks_distance(&stats, |t| noncentral_chi2_cdf(t * df, df, eta2));
    let m = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / m;
    let variance = stats.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    Ok(ConvergenceReport {
        n: spec.n,
        rho: privacy.map(|(b, _)| b.rho()),
        delta: privacy.map(|(_, d)| d.delta()),
        samples,
        dropped: samples - stats.len(),
        eta2,
        ks_distance: ks,
        mean,
        variance,
    })
}
