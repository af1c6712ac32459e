//! Benchmark fixtures shared by the criterion benches in `benches/`.

use dpslr_core::{
    build_tester, generate, ClipBound, GeneratorSpec, McConfig, NullSlope, PrivacyBudget,
    RandomSource, Sample, Tester, TesterKind, TesterSettings, XDist,
};

/// Settings used across benches: ρ = 0.5, Δ = 2, α = 0.05 and the given `k`.
pub fn settings(k: usize) -> TesterSettings {
    TesterSettings {
        budget: PrivacyBudget::new(0.5).expect("valid rho"),
        delta: ClipBound::new(2.0).expect("valid delta"),
        mc: McConfig::new(k, 0.05).expect("valid mc config"),
        null_slope: NullSlope::Pooled,
        ci_target: 0.0,
    }
}

/// A fixed dataset of `n` rows; grouped when `grouped` is set.
pub fn sample(n: usize, grouped: bool) -> Sample {
    let x = XDist::Normal { mean: 0.5, sd: 1.0 };
    let spec = if grouped {
        GeneratorSpec::mixture(x, 1.0, -1.0, 0.5, 1.0, n)
    } else {
        GeneratorSpec::linear(x, 1.0, 0.0, 0.35, n)
    };
    generate(&spec, &mut RandomSource::new(7, 0)).expect("valid spec")
}

pub fn tester(kind: TesterKind, k: usize) -> Box<dyn Tester> {
    build_tester(kind, &settings(k))
}
