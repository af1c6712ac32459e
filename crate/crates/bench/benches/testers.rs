use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dpslr_bench::{sample, settings, tester};
use dpslr_core::suffstat::dp_stats_linear;
use dpslr_core::{RandomSource, TesterKind};

fn release(c: &mut Criterion) {
    let mut group = c.benchmark_group("dp_stats_linear");
    for n in [500usize, 5_000, 50_000] {
        let s = sample(n, false);
        let st = settings(100);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            let mut rng = RandomSource::new(1, 0);
            b.iter(|| black_box(dp_stats_linear(s.dataset(), st.budget, st.delta, &mut rng)))
        });
    }
    group.finish();
}

// One full decision per iteration, including the Monte Carlo null simulation.
fn decisions(c: &mut Criterion) {
    let mut group = c.benchmark_group("decision_n500");
    group.sample_size(10);
    let cases = [
        (TesterKind::LinearF, false),
        (TesterKind::Ci, false),
        (TesterKind::Bernoulli, false),
        (TesterKind::MixtureF, true),
        (TesterKind::Kw, true),
    ];
    for (kind, grouped) in cases {
        let s = sample(500, grouped);
        let t = tester(kind, 200);
        group.bench_function(kind.name(), |b| {
            let mut rng = RandomSource::new(2, 0);
            b.iter(|| black_box(t.run(&s, &mut rng).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, release, decisions);
criterion_main!(benches);
