use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use psilab_bench::synthetic_table;
use psilab_core::amplifier::{concentrate, ConcentrationInstance};
use psilab_core::smooth_majorant::{vinogradov_bump, VinogradovParams};
use psilab_core::{build_psi_series, exp_sum, truncated_measure, BohrSpec};

fn sieve(c: &mut Criterion) {
    let mut g = c.benchmark_group("psi_sieve");
    g.sample_size(10);
    for limit in [100_000u64, 1_000_000] {
        g.bench_with_input(BenchmarkId::from_parameter(limit), &limit, |b, &n| {
            b.iter(|| build_psi_series(black_box(n)).unwrap())
        });
    }
    g.finish();
}

fn exponential_sum(c: &mut Criterion) {
    let table = synthetic_table(100_000);
    let t = table.t_max();
    c.bench_function("exp_sum_100k", |b| {
        b.iter(|| exp_sum(&table, black_box(1.5e6), t).unwrap())
    });
}

fn bohr_measure(c: &mut Criterion) {
    let mut g = c.benchmark_group("truncated_measure");
    for k in [1usize, 2, 4] {
        let freqs: Vec<f64> = (0..k).map(|i| 0.7 + 1.31 * i as f64).collect();
        let phases: Vec<f64> = (0..k).map(|i| 0.17 * i as f64).collect();
        let spec = BohrSpec::new(freqs, phases, 0.1, Some(5_000.0)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(k), &spec, |b, s| {
            b.iter(|| truncated_measure(black_box(s)).unwrap())
        });
    }
    g.finish();
}

fn concentration(c: &mut Criterion) {
    let points: Vec<f64> = synthetic_table(20_000).ordinates().to_vec();
    let t = *points.last().unwrap();
    let inst = ConcentrationInstance {
        points,
        t,
        freq: 0.37,
        delta: 0.2,
        eps: 0.01,
        c_const: 100.0,
    };
    c.bench_function("concentrate_20k", |b| {
        b.iter(|| concentrate(black_box(&inst)).unwrap())
    });
}

fn majorant(c: &mut Criterion) {
    let f = vinogradov_bump(VinogradovParams {
        a: 0.0,
        b: 0.3,
        delta: 0.05,
        r: 3,
    })
    .unwrap();
    c.bench_function("bump_coefficients_10k", |b| {
        b.iter(|| {
            (-10_000i64..=10_000)
                .map(|m| f.coefficient(m).norm())
                .sum::<f64>()
        })
    });
    let xs: Vec<f64> = (0..1_000).map(|i| i as f64 / 1_000.0).collect();
    let order = f.order_for_tail(1e-8);
    c.bench_function("bump_truncated_values", |b| {
        b.iter(|| f.truncated_values(black_box(&xs), order))
    });
}

criterion_group!(
    benches,
    sieve,
    exponential_sum,
    bohr_measure,
    concentration,
    majorant
);
criterion_main!(benches);
