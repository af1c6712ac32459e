//! Differentially private hypothesis tests for simple linear regression.
//!
//! Two questions are supported: does `y` depend linearly on `x`, and do two
//! groups share a regression slope. Each has a sufficient-statistic F test
//! calibrated by Monte Carlo simulation and a pairing-based nonparametric
//! alternative, all ρ-zCDP in the data rows.

// `!(x > 0.0)` is used on purpose: it also catches NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dist;
pub mod error;
pub mod harness;
pub mod linmodel;
pub mod montecarlo;
pub mod nonparam;
pub mod privacy;
pub mod rng;
pub mod suffstat;
pub mod testers;

pub use data::{generate, read_csv, GeneratorSpec, MixtureSpec, ResultRow, Sample, XDist};
pub use error::{Error, Result};
pub use harness::{
    compare_algorithms, convergence_diagnostic, estimate_rejection_prob, ConvergenceReport,
    DataSampler, RejectionEstimate,
};
pub use linmodel::{Dataset, GroupedDataset};
pub use montecarlo::{mc_test, Decision, McConfig, Outcome, Reason};
pub use privacy::{ClipBound, PrivacyBudget};
pub use rng::RandomSource;
pub use suffstat::{NullSlope, ThetaPair};
pub use testers::{build_tester, Tester, TesterKind, TesterParams, TesterSettings};
