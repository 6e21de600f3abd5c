use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hilfer_core::{make_graded_grid, make_order, picard_solve, Execution, IvpSpec, SolverConfig};

fn linear_solve(c: &mut Criterion) {
    let order = make_order(0.6, 0.5).unwrap();
    let ivp = IvpSpec::new(order, 1.0, |_t: f64, x: f64| -x, 0.0, 1.0).unwrap();
    let mut group = c.benchmark_group("picard_linear");
    group.sample_size(10);
    for n in [256usize, 1024] {
        let grid = make_graded_grid(0.0, 1.0, n, order.default_grading()).unwrap();
        for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let cfg = SolverConfig {
                execution,
                ..SolverConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(name, n), &grid, |b, grid| {
                b.iter(|| picard_solve(black_box(&ivp), grid, &cfg, None).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, linear_solve);
criterion_main!(benches);
