use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use regen_bernstein::chain_models::{make_two_state, SingularMod1Chain, UnitPoint};
use regen_bernstein::split_regen::InitialLaw;
use regen_bernstein::verify::{mc_tail, TwoBlockFactor};
use regen_bernstein::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn two_state_tail(c: &mut Criterion) {
    let chain = make_two_state(0.25, 0.25, 1.0).unwrap();
    let f = |x: usize| [-0.5, 0.5][x];
    let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
    let mut group = c.benchmark_group("two_state_mc_tail");
    group.sample_size(10);
    for n in [100usize, 1000] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| mc_tail(&chain, &f, &InitialLaw::Point(0), n, &t, 10_000, black_box(1), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn mod1_tail(c: &mut Criterion) {
    let chain = SingularMod1Chain::new(53).unwrap();
    let f = |x: UnitPoint| (std::f64::consts::TAU * x.value()).cos();
    let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.5).collect();
    let mut group = c.benchmark_group("mod1_mc_tail");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| mc_tail(&chain, &f, &InitialLaw::Stationary { burn_in: None }, 500, &t, 2_000, black_box(2), exec).unwrap())
        });
    }
    group.finish();
}

fn two_block_sup_tail(c: &mut Criterion) {
    let process = TwoBlockFactor::product();
    let t: Vec<f64> = (0..50).map(|i| i as f64 * 5.0).collect();
    let mut group = c.benchmark_group("two_block_sup_tail");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| process.sup_tail(1000, &t, 2_000, black_box(3), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, two_state_tail, mod1_tail, two_block_sup_tail);
criterion_main!(benches);
