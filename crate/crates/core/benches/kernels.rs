use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dtil_core::lattice::SiteBallScanner;
use dtil_core::synth::{band_limited_state, BandLimited};
use dtil_core::{density, energy, Lattice};

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let mut out = vec![("seq".to_string(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())];
    let n = rayon::current_num_threads();
    if n > 1 {
        out.push((format!("par{n}"), rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()));
    }
    out
}

fn kernels(c: &mut Criterion) {
    let lat = Lattice::with_size(4, 1.0).unwrap();
    let state = band_limited_state(&lat, &BandLimited::new(0.1, 7));
    let dens = density(&state);
    let scanner = SiteBallScanner::new(lat.spec(), 2.0).unwrap();
    let cuts: Vec<usize> = [1.0, 1.5, 2.0].iter().map(|&r| scanner.count_within(r)).collect();

    let mut group = c.benchmark_group("kernels_4x6");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new("evaluate", &name), |b| {
            pool.install(|| b.iter(|| energy::evaluate(&state)))
        });
        group.bench_function(BenchmarkId::new("density", &name), |b| pool.install(|| b.iter(|| density(&state))));
        group.bench_function(BenchmarkId::new("ball_scan", &name), |b| {
            pool.install(|| b.iter(|| scanner.prefix_sums(&dens.values, &cuts)))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
