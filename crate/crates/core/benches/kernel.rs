//! Summation-kernel throughput: sequential vs parallel scheduling of the
//! bulk pass of S_M, at several M scales and for two kinds of α. The two
//! modes produce bit-identical results, so this measures scheduling
//! overhead and speedup only.
//!
//! Run with `cargo bench -p malpha`; add `--no-default-features` to measure
//! the build without the parallel code path (the Parallel mode then
//! degrades to the sequential schedule).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use malpha::cf::AlphaSpec;
use malpha::sums::{default_rel_tol, s_m_in_mode, ExecMode};
use std::hint::black_box;

fn modes() -> Vec<(&'static str, ExecMode)> {
    let mut m = vec![("sequential", ExecMode::Sequential)];
    if cfg!(feature = "parallel") {
        m.push(("parallel", ExecMode::Parallel));
    }
    m
}

fn bench_alpha(c: &mut Criterion, group_name: &str, alpha: &AlphaSpec, ms: &[u64]) {
    let tol = default_rel_tol();
    let mut group = c.benchmark_group(group_name);
    for &m in ms {
        if m >= 1_000_000 {
            group.sample_size(10);
        } else {
            group.sample_size(20);
        }
        for (label, mode) in modes() {
            group.bench_with_input(BenchmarkId::new(label, m), &m, |b, &m| {
                b.iter(|| {
                    let rep = s_m_in_mode(black_box(alpha), m, &tol, mode).expect("sum");
                    black_box(rep.total);
                });
            });
        }
    }
    group.finish();
}

fn kernel_benches(c: &mut Criterion) {
    bench_alpha(
        c,
        "s_m/golden",
        &AlphaSpec::golden(),
        &[10_000, 100_000, 1_000_000],
    );
    bench_alpha(
        c,
        "s_m/random_dyadic",
        &AlphaSpec::random_dyadic(42, 4096).expect("valid"),
        &[10_000, 100_000],
    );
}

criterion_group!(benches, kernel_benches);
criterion_main!(benches);
