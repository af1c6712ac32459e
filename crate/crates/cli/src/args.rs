use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "dpslr",
    version,
    about = "Differentially private hypothesis tests for simple linear regression",
    long_about = None
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one private test on a CSV file or a generated dataset.
    Test(TestArgs),
    /// Estimate rejection rates over many generated datasets.
    Experiment(ExperimentArgs),
    /// Compare the sampled test statistic with its χ² limit.
    Diagnostic(DiagnosticArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestName {
    LinearF,
    MixtureF,
    Bernoulli,
    Kw,
    Ci,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    /// Use the generator as given.
    Power,
    /// Force the null: slope 0 for linear designs, equal slopes for mixtures.
    Significance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NullSlopeArg {
    Pooled,
    GroupOne,
}

/// Synthetic data flags.
#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    /// Number of rows
    #[arg(long, default_value_t = 500)]
    pub n: usize,

    /// Law of x: normal:MEAN,SD | uniform:LO,HI | exponential:SCALE | lognormal:MU,SIGMA
    #[arg(long, default_value = "normal:0.5,1")]
    pub x_dist: String,

    /// Slope of y on x (group 1 slope for mixtures)
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub slope: f64,

    /// Intercept (linear designs only)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub intercept: f64,

    /// Standard deviation of the Gaussian errors
    #[arg(long, default_value_t = 0.35)]
    pub sigma_e: f64,

    /// Group 2 slope; setting it generates a two-group mixture
    #[arg(long, allow_negative_numbers = true)]
    pub slope2: Option<f64>,

    /// Fraction of rows in group 1 for mixtures
    #[arg(long, default_value_t = 0.5)]
    pub frac1: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PrivacyArgs {
    /// zCDP budget ρ
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,

    /// Clip bound Δ
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,

    /// Significance level
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Simulated null statistics per Monte Carlo test
    #[arg(long, default_value_t = 1000)]
    pub k: usize,

    /// Null slope used by the mixture F test's simulation
    #[arg(long, value_enum, default_value_t = NullSlopeArg::Pooled)]
    pub null_slope: NullSlopeArg,

    /// Slope value tested by the interval (ci) test
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub ci_target: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[arg(value_enum)]
    pub tester: TestName,

    /// CSV file with a header row (conflicts with generator flags)
    #[arg(long, conflicts_with = "GeneratorArgs")]
    pub input: Option<PathBuf>,

    /// Column holding x
    #[arg(long, default_value = "x", requires = "input")]
    pub x: String,

    /// Column holding y
    #[arg(long, default_value = "y", requires = "input")]
    pub y: String,

    /// Column with two group labels (needed by mixture-f and kw)
    #[arg(long, requires = "input")]
    pub group: Option<String>,

    #[command(flatten)]
    pub generator: GeneratorArgs,

    #[command(flatten)]
    pub privacy: PrivacyArgs,

    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Print the decision as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub kind: ExperimentKind,

    /// Comma-separated testers: linear-f, mixture-f, bernoulli, kw, ci,
    /// nonprivate-linear-f, nonprivate-mixture-f
    #[arg(long, value_delimiter = ',', default_value = "linear-f")]
    pub testers: Vec<String>,

    /// Comma-separated privacy budgets
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.005,0.125,0.5,1.125,2.0"
    )]
    pub rho_grid: Vec<f64>,

    /// Datasets per (tester, ρ) cell
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,

    /// Results CSV path (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads (all cores when absent)
    #[arg(long)]
    pub jobs: Option<usize>,

    #[command(flatten)]
    pub generator: GeneratorArgs,

    /// Clip bound Δ
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,

    /// Significance level
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Simulated null statistics per Monte Carlo test
    #[arg(long, default_value_t = 1000)]
    pub k: usize,

    /// Null slope used by the mixture F test's simulation
    #[arg(long, value_enum, default_value_t = NullSlopeArg::Pooled)]
    pub null_slope: NullSlopeArg,

    /// Slope value tested by the interval (ci) test
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub ci_target: f64,

    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnosticArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,

    /// zCDP budget ρ
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,

    /// Clip bound Δ
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,

    /// Sample the classical statistic instead of the private one
    #[arg(long)]
    pub nonprivate: bool,

    /// Number of sampled statistics (at least 100)
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,

    /// Report CSV path (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads (all cores when absent)
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
