//! Compares the simulation study on one worker against the default pool.
//! Run with the parallel feature off to time the pure sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tailmax::{DgpSpec, Model};
use tailmax::simulation::{run_study, StudyConfig};

fn study_config(threads: usize) -> StudyConfig {
    let mut config = StudyConfig::new(500, 16, vec![30, 60], 7);
    config.threads = threads;
    config
}

fn bench_study(c: &mut Criterion) {
    let spec = DgpSpec::new(Model::M1, 4).unwrap();
    let mut group = c.benchmark_group("run_study");
    group.sample_size(10);
    for threads in [1usize, 0] {
        let label = if threads == 1 { "sequential" } else { "pool" };
        group.bench_with_input(BenchmarkId::from_parameter(label), &threads, |b, &t| {
            let config = study_config(t);
            b.iter(|| run_study(&spec, &config).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_study);
criterion_main!(benches);
