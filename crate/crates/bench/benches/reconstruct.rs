use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use cmech_bench::{golden_mean_series, mention_series};
use cmech_core::evaluate::filter_predict;
use cmech_core::{reconstruct_machine, reconstruct_transducer, MachineKind, ReconstructionConfig, SeriesRef};

const STEPS: usize = 100_000;

fn epsilon_machine(c: &mut Criterion) {
    let series = golden_mean_series(STEPS);
    let mut group = c.benchmark_group("reconstruct_epsilon_machine");
    group.throughput(Throughput::Elements(STEPS as u64));
    for l_max in [2, 4, 6, 8] {
        let cfg = ReconstructionConfig::new(l_max, MachineKind::EpsilonMachine);
        group.bench_with_input(BenchmarkId::from_parameter(l_max), &cfg, |b, cfg| {
            b.iter(|| reconstruct_machine(black_box(&series), cfg).unwrap())
        });
    }
    group.finish();
}

fn transducers(c: &mut Criterion) {
    let joint = mention_series(STEPS);
    let mut group = c.benchmark_group("reconstruct_transducer");
    group.throughput(Throughput::Elements(STEPS as u64));
    for mode in [MachineKind::TransducerMemoryless, MachineKind::TransducerMemoryful] {
        for l_max in [2, 4] {
            let cfg = ReconstructionConfig::new(l_max, mode);
            group.bench_with_input(BenchmarkId::new(mode.as_str(), l_max), &cfg, |b, cfg| {
                b.iter(|| reconstruct_transducer(black_box(&joint), cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn filtering(c: &mut Criterion) {
    let series = golden_mean_series(STEPS);
    let m = reconstruct_machine(&series, &ReconstructionConfig::new(4, MachineKind::EpsilonMachine)).unwrap();
    let mut group = c.benchmark_group("filter_predict");
    group.throughput(Throughput::Elements(STEPS as u64));
    group.bench_function("golden_mean", |b| {
        b.iter(|| filter_predict(&m, SeriesRef::Output(black_box(&series))).unwrap())
    });
    group.finish();
}

criterion_group!(benches, epsilon_machine, transducers, filtering);
criterion_main!(benches);
