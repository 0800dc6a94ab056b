use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hjcost::enumerate_plans;
use hjcost::exec::{execute_plan, simulate_counts, Database, ExecOptions, HashKind};
use hjcost::SwMode;
use hjcost_bench::ratio_chain;

fn plans(c: &mut Criterion) {
    let q = ratio_chain(1 << 18);
    let db = Database::generate(&q, 1).unwrap();
    let all = enumerate_plans(&q).unwrap();
    let opts = ExecOptions::default();
    let mut group = c.benchmark_group("execute");
    group.sample_size(10);
    for name in ["L3210", "R3210", "B3210", "L0123"] {
        let p = all.iter().find(|p| p.name == name).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(name), &p.plan, |b, plan| {
            b.iter(|| execute_plan(plan, &db, &opts).unwrap().aggregate)
        });
    }
    group.finish();
}

fn prefetch(c: &mut Criterion) {
    let q = ratio_chain(1 << 20);
    let db = Database::generate(&q, 2).unwrap();
    let p = enumerate_plans(&q).unwrap().into_iter().find(|p| p.name == "R3210").unwrap();
    let mut group = c.benchmark_group("prefetch");
    group.sample_size(10);
    for on in [false, true] {
        let opts = ExecOptions { prefetch: on, ..ExecOptions::default() };
        group.bench_with_input(BenchmarkId::from_parameter(on), &opts, |b, o| {
            b.iter(|| execute_plan(&p.plan, &db, o).unwrap().aggregate)
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let q = ratio_chain(1 << 14);
    let db = Database::generate(&q, 3).unwrap();
    let p = enumerate_plans(&q).unwrap().remove(0);
    c.bench_function("simulate_counts", |b| {
        b.iter(|| simulate_counts(&p.plan, &db, 64, SwMode::TableConsistent, HashKind::Multiplicative).unwrap())
    });
}

criterion_group!(benches, plans, prefetch, oracle);
criterion_main!(benches);
