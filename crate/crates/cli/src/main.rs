mod args;

use std::fs::File;
use std::io::{self, Write};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::Parser;
use serde::Serialize;

use dpslr_core::data::{read_csv, write_results, MixtureSpec};
use dpslr_core::harness::{convergence_diagnostic, estimate_rejection_prob};
use dpslr_core::{
    generate, ClipBound, Decision, Error, GeneratorSpec, McConfig, NullSlope, PrivacyBudget,
    RandomSource, TesterKind, TesterSettings, XDist,
};

use args::{
    Cli, Command, DiagnosticArgs, ExperimentArgs, ExperimentKind, GeneratorArgs, NullSlopeArg,
    TestArgs, TestName,
};

/// A bad flag value that clap cannot catch on its own.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidParameter(_) | Error::InvalidSpec(_) | Error::NeedsGroups { .. }) => {
            EXIT_USAGE
        }
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => run_test(a),
        Command::Experiment(a) => run_experiment(a),
        Command::Diagnostic(a) => run_diagnostic(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn parse_x_dist(s: &str) -> anyhow::Result<XDist> {
    let (kind, params) = s.split_once(':').unwrap_or((s, ""));
    let nums: Vec<f64> = params
        .split(',')
        .filter(|p| !p.is_empty())
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad --x-dist parameters `{params}`")))?;
    let dist = match (kind, nums.as_slice()) {
        ("normal", &[mean, sd]) => XDist::Normal { mean, sd },
        ("uniform", &[lo, hi]) => XDist::Uniform { lo, hi },
        ("exponential", &[scale]) => XDist::Exponential { scale },
        ("lognormal", &[mu, sigma]) => XDist::LogNormal { mu, sigma },
        _ => return Err(usage(format!("unrecognised --x-dist `{s}`"))),
    };
    Ok(dist)
}

fn generator_spec(g: &GeneratorArgs) -> anyhow::Result<GeneratorSpec> {
    let x_dist = parse_x_dist(&g.x_dist)?;
    let mut spec = GeneratorSpec::linear(x_dist, g.slope, g.intercept, g.sigma_e, g.n);
    if let Some(slope2) = g.slope2 {
        spec.intercept = 0.0;
        spec.mixture = Some(MixtureSpec {
            slope2,
            frac1: g.frac1,
        });
    }
    spec.validate()?;
    Ok(spec)
}

fn null_slope(a: NullSlopeArg) -> NullSlope {
    match a {
        NullSlopeArg::Pooled => NullSlope::Pooled,
        NullSlopeArg::GroupOne => NullSlope::GroupOne,
    }
}

fn tester_settings(
    rho: f64,
    delta: f64,
    alpha: f64,
    k: usize,
    ns: NullSlopeArg,
    ci_target: f64,
) -> anyhow::Result<TesterSettings> {
    Ok(TesterSettings {
        budget: PrivacyBudget::new(rho)?,
        delta: ClipBound::new(delta)?,
        mc: McConfig::new(k, alpha)?,
        null_slope: null_slope(ns),
        ci_target,
    })
}

fn tester_kind(t: TestName) -> TesterKind {
    match t {
        TestName::LinearF => TesterKind::LinearF,
        TestName::MixtureF => TesterKind::MixtureF,
        TestName::Bernoulli => TesterKind::Bernoulli,
        TestName::Kw => TesterKind::Kw,
        TestName::Ci => TesterKind::Ci,
    }
}

fn log_config<T: Serialize>(config: &T) -> anyhow::Result<()> {
    eprintln!("config: {}", serde_json::to_string(config)?);
    Ok(())
}

fn set_jobs(jobs: Option<usize>) -> anyhow::Result<()> {
    if let Some(j) = jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "none".into())
}

#[derive(Serialize)]
struct TestConfig<'a> {
    command: &'static str,
    tester: &'static str,
    source: serde_json::Value,
    settings: &'a TesterSettings,
    seed: u64,
}

#[derive(Serialize)]
struct TestRecord<'a> {
    tester: &'static str,
    n: usize,
    seed: u64,
    decision: &'a Decision,
}

fn run_test(a: TestArgs) -> anyhow::Result<()> {
    let kind = tester_kind(a.tester);
    let p = &a.privacy;
    let settings = tester_settings(p.rho, p.delta, p.alpha, p.k, p.null_slope, p.ci_target)?;
    let root = RandomSource::new(a.seed, 0);
    let (sample, source) = match &a.input {
        Some(path) => {
            let sample = read_csv(path, &a.x, &a.y, a.group.as_deref())
                .with_context(|| format!("reading {}", path.display()))?;
            let source = serde_json::json!({
                "input": path, "x": a.x, "y": a.y, "group": a.group,
            });
            (sample, source)
        }
        None => {
            let spec = generator_spec(&a.generator)?;
            let sample = generate(&spec, &mut root.substream(0))?;
            (sample, serde_json::to_value(spec)?)
        }
    };
    log_config(&TestConfig {
        command: "test",
        tester: kind.name(),
        source,
        settings: &settings,
        seed: a.seed,
    })?;

    let tester = dpslr_core::build_tester(kind, &settings);
    let decision = tester.run(&sample, &mut root.substream(1))?;
    let mut out = io::stdout().lock();
    if a.json {
        let record = TestRecord {
            tester: kind.name(),
            n: sample.dataset().n(),
            seed: a.seed,
            decision: &decision,
        };
        writeln!(out, "{}", serde_json::to_string(&record)?)?;
    } else {
        writeln!(out, "tester: {}", kind.name())?;
        writeln!(out, "n: {}", sample.dataset().n())?;
        writeln!(out, "outcome: {:?}", decision.outcome)?;
        writeln!(out, "statistic: {}", fmt_opt(decision.statistic))?;
        writeln!(out, "threshold: {}", fmt_opt(decision.threshold))?;
        if let Some((lo, hi)) = decision.interval {
            writeln!(out, "interval: ({lo}, {hi})")?;
        }
        writeln!(out, "reason: {:?}", decision.reason)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ExperimentConfig<'a> {
    command: &'static str,
    kind: &'static str,
    spec: GeneratorSpec,
    testers: Vec<&'static str>,
    rho_grid: &'a [f64],
    delta: f64,
    alpha: f64,
    k: usize,
    trials: usize,
    seed: u64,
}

fn run_experiment(a: ExperimentArgs) -> anyhow::Result<()> {
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    if a.rho_grid.is_empty() {
        return Err(usage("--rho-grid is empty"));
    }
    let kinds: Vec<TesterKind> = a
        .testers
        .iter()
        .map(|t| t.parse::<TesterKind>().map_err(|e| usage(e.to_string())))
        .collect::<anyhow::Result<_>>()?;
    let mut spec = generator_spec(&a.generator)?;
    if a.kind == ExperimentKind::Significance {
        match spec.mixture.as_mut() {
            Some(m) => m.slope2 = spec.slope,
            None => spec.slope = 0.0,
        }
    }
    if spec.mixture.is_none() {
        if let Some(k) = kinds.iter().find(|k| k.needs_groups()) {
            return Err(usage(format!(
                "tester `{k}` needs a mixture design; pass --slope2"
            )));
        }
    }
    set_jobs(a.jobs)?;
    log_config(&ExperimentConfig {
        command: "experiment",
        kind: match a.kind {
            ExperimentKind::Power => "power",
            ExperimentKind::Significance => "significance",
        },
        spec,
        testers: kinds.iter().map(|k| k.name()).collect(),
        rho_grid: &a.rho_grid,
        delta: a.delta,
        alpha: a.alpha,
        k: a.k,
        trials: a.trials,
        seed: a.seed,
    })?;

    let root = RandomSource::new(a.seed, 0);
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for kind in &kinds {
        // a non-private tester ignores ρ, so it gets one row
        let grid: &[f64] = if kind.is_private() {
            &a.rho_grid
        } else {
            &a.rho_grid[..1]
        };
        for &rho in grid {
            let settings = tester_settings(rho, a.delta, a.alpha, a.k, a.null_slope, a.ci_target)?;
            let tester = dpslr_core::build_tester(*kind, &settings);
            let est = estimate_rejection_prob(
                &spec,
                tester.as_ref(),
                a.trials,
                &mut root.substream(cell),
            )?;
            cell += 1;
            rows.push(est.to_row());
        }
    }
    match &a.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_results(f, &rows)?;
        }
        None => write_results(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct DiagnosticConfig {
    command: &'static str,
    spec: GeneratorSpec,
    rho: Option<f64>,
    delta: Option<f64>,
    samples: usize,
    seed: u64,
}

fn run_diagnostic(a: DiagnosticArgs) -> anyhow::Result<()> {
    let spec = generator_spec(&a.generator)?;
    if spec.mixture.is_some() {
        bail!(usage("the diagnostic needs a linear design; drop --slope2"));
    }
    let privacy = if a.nonprivate {
        None
    } else {
        Some((PrivacyBudget::new(a.rho)?, ClipBound::new(a.delta)?))
    };
    set_jobs(a.jobs)?;
    log_config(&DiagnosticConfig {
        command: "diagnostic",
        spec,
        rho: privacy.map(|(b, _)| b.rho()),
        delta: privacy.map(|(_, d)| d.delta()),
        samples: a.samples,
        seed: a.seed,
    })?;
    let report =
        convergence_diagnostic(&spec, privacy, a.samples, &mut RandomSource::new(a.seed, 0))
            .map_err(|e| match e {
                Error::InsufficientSamples { .. } => usage(e.to_string()),
                other => anyhow!(other),
            })?;

    let mut body = String::from("n,rho,delta,samples,dropped,eta2,ks_distance,mean,variance\n");
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    body.push_str(&format!(
        "{},{},{},{},{},{},{},{},{}\n",
        report.n,
        opt(report.rho),
        opt(report.delta),
        report.samples,
        report.dropped,
        report.eta2,
        report.ks_distance,
        report.mean,
        report.variance
    ));
    match &a.out {
        Some(path) => {
            std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?
        }
        None => io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}
