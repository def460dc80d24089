use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use xyineq_bench::{chain, chain_hamiltonian, end_to_end};
use xyineq_core::doubling::DoubledSpectra;
use xyineq_core::{run_campaign, CampaignConfig, GibbsState, Mode, SpectralDecomposition, SpinAxis};

fn eigendecomposition(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigendecomposition");
    for n in [4, 6, 8] {
        let h = chain_hamiltonian(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| {
            b.iter(|| SpectralDecomposition::new(black_box(h)).unwrap())
        });
    }
    g.finish();
}

fn schwinger(c: &mut Criterion) {
    let mut g = c.benchmark_group("truncated_schwinger");
    for n in [4, 6, 8] {
        let (lat, _) = chain(n);
        let state = GibbsState::new(&chain_hamiltonian(n), 1.0).unwrap();
        let (a, b) = end_to_end(&lat, SpinAxis::X);
        g.bench_function(BenchmarkId::new("single", n), |bench| {
            bench.iter(|| state.truncated_schwinger(black_box(&a), black_box(&b), 0.5).unwrap())
        });
        let pair = state.eigenbasis_pair(&a, &b).unwrap();
        g.bench_function(BenchmarkId::new("reused_pair", n), |bench| {
            bench.iter(|| pair.truncated(black_box(0.5)))
        });
    }
    g.finish();
}

fn doubled_identity(c: &mut Criterion) {
    let n = 4;
    let (lat, _) = chain(n);
    let h = chain_hamiltonian(n);
    let (a, b) = end_to_end(&lat, SpinAxis::Y);
    c.bench_function("doubled_identity_sweep/4", |bench| {
        bench.iter(|| {
            let spectra = DoubledSpectra::new(&h).unwrap();
            spectra
                .identity_sweep(&a, &b, &[0.5, 1.0, 4.0], &[0.0, 0.25, 0.5, 0.75, 1.0])
                .unwrap()
        })
    });
}

fn campaign(c: &mut Criterion) {
    let mut cfg = CampaignConfig::new(Mode::Theorem1);
    cfg.sites = 4;
    cfg.trials = 50;
    cfg.seed = 1;
    let mut g = c.benchmark_group("campaign");
    g.sample_size(10);
    g.bench_function("theorem1/50x4", |b| b.iter(|| run_campaign(&cfg, Some(1)).unwrap()));
    g.finish();
}

criterion_group!(benches, eigendecomposition, schwinger, doubled_identity, campaign);
criterion_main!(benches);
