use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nikishin::analysis::{biorthogonality_matrix, convergence_table, Grid};
use nikishin::par::Exec;
use nikishin::samples::{reference_system, to_float};
use rug::Rational;

fn modes() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)]
}

fn convergence(c: &mut Criterion) {
    let base = to_float(&reference_system(), 256).unwrap();
    let grid = Grid::around(&base, &Rational::from((1, 4)), 11).unwrap();
    let ns: Vec<usize> = (1..=4).collect();
    let mut group = c.benchmark_group("convergence_table_f256");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let sys = base.clone();
                convergence_table(&sys, &ns, &grid, exec).unwrap()
            })
        });
    }
    group.finish();
}

fn biorthogonality(c: &mut Criterion) {
    let base = reference_system();
    let mut group = c.benchmark_group("biorthogonality_rational");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let sys = base.clone();
                biorthogonality_matrix(&sys, 4, exec).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, convergence, biorthogonality);
criterion_main!(benches);
