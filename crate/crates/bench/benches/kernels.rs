use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use einlab::exact::StirlingRows;
use einlab::quadrature::{integrate_half_line, QuadratureConfig};
use einlab::series::term_values;
use einlab::special::{ein, euler_gamma};
use einlab::{Alpha, PrecisionConfig, PrecisionReal};
use einlab_bench::sample_points;

fn elementary(c: &mut Criterion) {
    let mut g = c.benchmark_group("elementary");
    for prec in [128u32, 512, 2048] {
        let xs = sample_points(prec);
        g.bench_with_input(BenchmarkId::new("exp", prec), &xs, |b, xs| {
            b.iter(|| xs.iter().map(|x| x.exp()).collect::<Vec<_>>())
        });
        g.bench_with_input(BenchmarkId::new("ln", prec), &xs, |b, xs| {
            b.iter(|| xs.iter().map(|x| x.ln().unwrap()).collect::<Vec<_>>())
        });
    }
    g.finish();
}

fn stirling(c: &mut Criterion) {
    let mut g = c.benchmark_group("stirling_rows");
    g.sample_size(10);
    for k in [500usize, 3000] {
        g.bench_with_input(BenchmarkId::new("n3", k), &k, |b, &k| {
            b.iter(|| StirlingRows::new(3).take(k).last())
        });
    }
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("quadrature");
    g.sample_size(10);
    for digits in [20u32, 40, 60] {
        let cfg = PrecisionConfig::with_digits(digits).unwrap();
        let quad = QuadratureConfig::for_precision(&cfg);
        let p = cfg.bits();
        let zero = PrecisionReal::zero(p);
        let one = PrecisionReal::one(p);
        // ∫₀^∞ e^{−t}/(1+t) dt
        g.bench_with_input(BenchmarkId::new("delta_integral", digits), &digits, |b, _| {
            b.iter(|| {
                integrate_half_line(|t| (-t).exp().checked_div(&(&one + t)), &zero, &quad, p)
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn constants_and_series(c: &mut Criterion) {
    let mut g = c.benchmark_group("series");
    g.sample_size(10);
    let cfg = PrecisionConfig::default();
    let p = cfg.bits();
    g.bench_function("ein1_60_digits", |b| b.iter(|| ein(&PrecisionReal::one(p))));
    g.bench_function("euler_gamma_uncached_route", |b| {
        b.iter(|| einlab::special::gamma_euler_maclaurin(black_box(p)))
    });
    g.bench_function("euler_gamma_cached", |b| b.iter(|| euler_gamma(&cfg)));
    g.bench_function("terms_at_inv_e_k1000", |b| {
        b.iter(|| term_values(&Alpha::inv_e(), 1000, p))
    });
    g.finish();
}

criterion_group!(benches, elementary, stirling, quadrature, constants_and_series);
criterion_main!(benches);
