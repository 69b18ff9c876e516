use std::hint::black_box;

use chirpofdm::channel::{sample_channel, TimeVaryingChannel};
use chirpofdm::equalizers::LmmseSolver;
use chirpofdm::numerics::{complex_gaussian, hermitian_eigen};
use chirpofdm::{ChannelSpec, ComplexMatrix, ExperimentConfig, SimRng, Waveform};
use criterion::{criterion_group, criterion_main, Criterion};

fn modems(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let mut group = c.benchmark_group("transmit");
    for w in Waveform::ALL {
        let modem = cfg.modem(w).unwrap();
        let x = complex_gaussian(modem.symbols(), 1.0, &mut SimRng::new(1, 0));
        group.bench_function(w.name(), |b| b.iter(|| modem.transmit(black_box(&x))));
    }
    group.finish();
}

fn lmmse(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let mut rng = SimRng::new(2, 0);
    let real = sample_channel(&ChannelSpec::default(), &mut rng);
    let mut group = c.benchmark_group("lmmse");
    group.sample_size(20);
    for w in [Waveform::ChirpedDftsOfdm, Waveform::Ofdm] {
        let modem = cfg.modem(w).unwrap();
        let tv = TimeVaryingChannel::new(&real, modem.samples()).unwrap();
        let y = complex_gaussian(modem.samples(), 1.0, &mut rng);
        group.bench_function(format!("build/{w}"), |b| {
            b.iter(|| LmmseSolver::new(&modem, &tv).unwrap())
        });
        let solver = LmmseSolver::new(&modem, &tv).unwrap();
        group.bench_function(format!("equalize/{w}"), |b| {
            b.iter(|| solver.equalize(black_box(&y), 0.03).unwrap())
        });
        group.bench_function(format!("output_snr/{w}"), |b| {
            b.iter(|| solver.output_snr(0.03).unwrap())
        });
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mut rng = SimRng::new(3, 0);
    for n in [3usize, 16] {
        let b = ComplexMatrix::from_row_major(n, n, complex_gaussian(n * n, 1.0, &mut rng)).unwrap();
        let a = b.gram();
        c.bench_function(&format!("jacobi_eigen/{n}"), |bench| {
            bench.iter(|| hermitian_eigen(black_box(&a)).unwrap())
        });
    }
}

criterion_group!(benches, modems, lmmse, eigen);
criterion_main!(benches);
