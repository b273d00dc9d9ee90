use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kinetic_apnn::apnn::{loss_and_gradient, sample_collocation, CollocationConfig, LossConfig, NetworkBundle, NetworkSpec};
use kinetic_apnn::collision::KernelSpec;
use kinetic_apnn::par;
use kinetic_apnn::problem::{Problem, ProblemConfig};
use kinetic_apnn::reference::{solve_sg_micromacro, SolverConfig};

fn desk() -> Problem {
    Problem::new(&ProblemConfig::default(), &KernelSpec::default()).expect("desk problem")
}

fn loss_gradient(c: &mut Criterion) {
    let p = desk();
    let bundle = NetworkBundle::new(&NetworkSpec::default(), &p, 1).expect("network");
    let batch = sample_collocation(&CollocationConfig::default(), &p.vgrid, p.config.t_end, 7).expect("batch");
    let cfg = LossConfig::default();
    let mut g = c.benchmark_group("loss_and_gradient");
    for parallel in [true, false] {
        let label = if parallel { "parallel" } else { "sequential" };
        g.bench_with_input(BenchmarkId::from_parameter(label), &parallel, |b, &on| {
            par::set_enabled(on);
            b.iter(|| loss_and_gradient(&bundle, &p, &batch, &cfg, p.eps()).expect("loss"));
        });
    }
    g.finish();
    par::set_enabled(true);
}

fn solver(c: &mut Criterion) {
    let pc = ProblemConfig { t_end: 0.05, ..Default::default() };
    let p = Problem::new(&pc, &KernelSpec::default()).expect("problem");
    let sc = SolverConfig { dt: 1e-3, cfl: 1.0, snapshots: 2 };
    let mut g = c.benchmark_group("imex_solver");
    g.sample_size(10);
    for parallel in [true, false] {
        let label = if parallel { "parallel" } else { "sequential" };
        g.bench_with_input(BenchmarkId::from_parameter(label), &parallel, |b, &on| {
            par::set_enabled(on);
            b.iter(|| solve_sg_micromacro(&p, &sc).expect("solve"));
        });
    }
    g.finish();
    par::set_enabled(true);
}

criterion_group!(benches, loss_gradient, solver);
criterion_main!(benches);
