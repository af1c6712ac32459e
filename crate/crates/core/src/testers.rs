//! Uniform interface over every tester so harness and CLI can treat them alike.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::dist::f_upper_quantile;
use crate::error::{Error, Result};
use crate::linmodel::{
    f_stat_linear, f_stat_mixture, mixture_moments, ols_linear, ols_mixture_from, suff_stats,
    GroupedDataset, R,
};
use crate::montecarlo::{
    ci_bootstrap_test, mc_test, Decision, LinearFProcedure, McConfig, MixtureFProcedure, Reason,
};
use crate::nonparam::{bernoulli_test, kw_test};
use crate::privacy::{ClipBound, PrivacyBudget};
use crate::rng::RandomSource;
use crate::suffstat::NullSlope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TesterKind {
    LinearF,
    MixtureF,
    Bernoulli,
    Kw,
    Ci,
    NonprivateLinearF,
    NonprivateMixtureF,
}

impl TesterKind {
    pub const ALL: [TesterKind; 7] = [
        TesterKind::LinearF,
        TesterKind::MixtureF,
        TesterKind::Bernoulli,
        TesterKind::Kw,
        TesterKind::Ci,
        TesterKind::NonprivateLinearF,
        TesterKind::NonprivateMixtureF,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TesterKind::LinearF => "linear-f",
            TesterKind::MixtureF => "mixture-f",
            TesterKind::Bernoulli => "bernoulli",
            TesterKind::Kw => "kw",
            TesterKind::Ci => "ci",
            TesterKind::NonprivateLinearF => "nonprivate-linear-f",
            TesterKind::NonprivateMixtureF => "nonprivate-mixture-f",
        }
    }

    /// Whether the tester compares two groups rather than testing one slope.
    pub fn needs_groups(self) -> bool {
        matches!(
            self,
            TesterKind::MixtureF | TesterKind::Kw | TesterKind::NonprivateMixtureF
        )
    }

    pub fn is_private(self) -> bool {
        !matches!(
            self,
            TesterKind::NonprivateLinearF | TesterKind::NonprivateMixtureF
        )
    }
}

impl fmt::Display for TesterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TesterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TesterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown tester `{s}`")))
    }
}

/// The knobs a tester was run with; fields a tester does not use are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TesterParams {
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: f64,
    pub k: Option<usize>,
}

pub trait Tester: Sync {
    fn kind(&self) -> TesterKind;

    fn params(&self) -> TesterParams;

    fn run(&self, sample: &Sample, rng: &mut RandomSource) -> Result<Decision>;

    fn id(&self) -> &'static str {
        self.kind().name()
    }
}

fn groups(sample: &Sample, kind: TesterKind) -> Result<&GroupedDataset> {
    sample.grouped().ok_or_else(|| Error::NeedsGroups {
        tester: kind.name().to_string(),
    })
}

/// Settings shared by [`build_tester`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TesterSettings {
    pub budget: PrivacyBudget,
    pub delta: ClipBound,
    pub mc: McConfig,
    pub null_slope: NullSlope,
    /// Slope value tested by the interval tester.
    pub ci_target: f64,
}

pub fn build_tester(kind: TesterKind, s: &TesterSettings) -> Box<dyn Tester> {
    match kind {
        TesterKind::LinearF => Box::new(LinearFTester {
            budget: s.budget,
            delta: s.delta,
            mc: s.mc,
        }),
        TesterKind::MixtureF => Box::new(MixtureFTester {
            budget: s.budget,
            delta: s.delta,
            mc: s.mc,
            null_slope: s.null_slope,
        }),
        TesterKind::Bernoulli => Box::new(BernoulliTester {
            budget: s.budget,
            alpha: s.mc.alpha(),
        }),
        TesterKind::Kw => Box::new(KwTester {
            budget: s.budget,
            mc: s.mc,
        }),
        TesterKind::Ci => Box::new(CiTester {
            budget: s.budget,
            delta: s.delta,
            mc: s.mc,
            target: s.ci_target,
        }),
        TesterKind::NonprivateLinearF => Box::new(NonPrivateLinearF {
            alpha: s.mc.alpha(),
        }),
        TesterKind::NonprivateMixtureF => Box::new(NonPrivateMixtureF {
            alpha: s.mc.alpha(),
        }),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinearFTester {
    pub budget: PrivacyBudget,
    pub delta: ClipBound,
    pub mc: McConfig,
}

impl Tester for LinearFTester {
    fn kind(&self) -> TesterKind {
        TesterKind::LinearF
    }

    fn params(&self) -> TesterParams {
        TesterParams {
            rho: Some(self.budget.rho()),
            delta: Some(self.delta.delta()),
            alpha: self.mc.alpha(),
            k: Some(self.mc.k()),
        }
    }

    fn run(&self, sample: &Sample, rng: &mut RandomSource) -> Result<Decision> {
        let p = LinearFProcedure {
            budget: self.budget,
            delta: self.delta,
        };
        Ok(mc_test(sample.dataset(), &p, &self.mc, rng))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MixtureFTester {
    pub budget: PrivacyBudget,
    pub delta: ClipBound,
    pub mc: McConfig,
    pub null_slope: NullSlope,
}

impl Tester for MixtureFTester {
    fn kind(&self) -> TesterKind {
        TesterKind::MixtureF
    }

    fn params(&self) -> TesterParams {
        TesterParams {
            rho: Some(self.budget.rho()),
            delta: Some(self.delta.delta()),
            alpha: self.mc.alpha(),
            k: Some(self.mc.k()),
        }
    }

    fn run(&self, sample: &Sample, rng: &mut RandomSource) -> Result<Decision> {
        let g = groups(sample, self.kind())?;
        let p = MixtureFProcedure {
            budget: self.budget,
            delta: self.delta,
            null_slope: self.null_slope,
        };
        Ok(mc_test(g, &p, &self.mc, rng))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BernoulliTester {
    pub budget: PrivacyBudget,
    pub alpha: f64,
}

impl Tester for BernoulliTester {
    fn kind(&self) -> TesterKind {
        TesterKind::Bernoulli
    }

    fn params(&self) -> TesterParams {
        TesterParams {
            rho: Some(self.budget.rho()),
            delta: None,
            alpha: self.alpha,
            k: None,
        }
    }

    fn run(&self, sample: &Sample, rng: &mut RandomSource) -> Result<Decision> {
        bernoulli_test(sample.dataset(), self.budget, self.alpha, rng)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KwTester {
    pub budget: PrivacyBudget,
    pub mc: McConfig,
}

impl Tester for KwTester {
    fn kind(&self) -> TesterKind {
        TesterKind::Kw
    }

    fn params(&self) -> TesterParams {
        TesterParams {
            rho: Some(self.budget.rho()),
            delta: None,
            alpha: self.mc.alpha(),
            k: Some(self.mc.k()),
        }
    }

    fn run(&self, sample: &Sample, rng: &mut RandomSource) -> Result<Decision> {
        kw_test(groups(sample, self.kind())?, self.budget, &self.mc, rng)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CiTester {
    pub budget: PrivacyBudget,
    pub delta: ClipBound,
    pub mc: McConfig,
    pub target: f64,
}

impl Tester for CiTester {
    fn kind(&self) -> TesterKind {
        TesterKind::Ci
    }

    fn params(&self) -> TesterParams {
        TesterParams {
            rho: Some(self.budget.rho()),
            delta: Some(self.delta.delta()),
            alpha: self.mc.alpha(),
            k: Some(self.mc.k()),
        }
    }

    fn run(&self, sample: &Sample, rng: &mut RandomSource) -> Result<Decision> {
        Ok(ci_bootstrap_test(
            sample.dataset(),
            self.budget,
            self.delta,
            &self.mc,
            self.target,
            rng,
        ))
    }
}

/// Classical F test against the exact `F(1, n − 2)` critical value.
#[derive(Debug, Clone, Copy)]
pub struct NonPrivateLinearF {
    pub alpha: f64,
}

impl Tester for NonPrivateLinearF {
    fn kind(&self) -> TesterKind {
        TesterKind::NonprivateLinearF
    }

    fn params(&self) -> TesterParams {
        TesterParams {
            rho: None,
            delta: None,
            alpha: self.alpha,
            k: None,
        }
    }

    fn run(&self, sample: &Sample, _rng: &mut RandomSource) -> Result<Decision> {
        let s = suff_stats(sample.dataset());
        let t = match ols_linear(&s).and_then(|fit| f_stat_linear(&fit, &s)) {
            Ok(t) => t,
            Err(Error::SingularDesign | Error::ZeroVariance) => {
                return Ok(Decision::fail(Reason::DegenerateStat))
            }
            Err(e) => return Err(e),
        };
        let crit = f_upper_quantile(self.alpha, 1.0, (s.n - R) as f64);
        Ok(Decision::threshold_test(t, crit))
    }
}

/// Classical equal-slopes F test for two groups through the origin.
#[derive(Debug, Clone, Copy)]
pub struct NonPrivateMixtureF {
    pub alpha: f64,
}

impl Tester for NonPrivateMixtureF {
    fn kind(&self) -> TesterKind {
        TesterKind::NonprivateMixtureF
    }

    fn params(&self) -> TesterParams {
        TesterParams {
            rho: None,
            delta: None,
            alpha: self.alpha,
            k: None,
        }
    }

    fn run(&self, sample: &Sample, _rng: &mut RandomSource) -> Result<Decision> {
        let m = mixture_moments(groups(sample, self.kind())?);
        let t = match ols_mixture_from(&m).and_then(|fit| f_stat_mixture(&fit, &m)) {
            Ok(t) => t,
            Err(Error::SingularDesign | Error::ZeroVariance) => {
                return Ok(Decision::fail(Reason::DegenerateStat))
            }
            Err(e) => return Err(e),
        };
        let crit = f_upper_quantile(self.alpha, 1.0, (m.n() - R) as f64);
        Ok(Decision::threshold_test(t, crit))
    }
}
