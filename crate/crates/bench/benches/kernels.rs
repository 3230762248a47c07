//! Benchmarks for the kernels everything else leans on: progression
//! counting, the exact solver, and graph construction.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aplab_core::cache::SolverCache;
use aplab_core::exact::{rk_exact, SearchBudget};
use aplab_core::{ApGraph, IntSet};

fn dense_interval(n: i64) -> IntSet {
    (1..=n).collect()
}

fn sparse_random(n: usize, span: i64, seed: u64) -> IntSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = std::collections::BTreeSet::new();
    while out.len() < n {
        out.insert(rng.gen_range(-span..=span));
    }
    out.into_iter().collect()
}

fn bench_count(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_s_aps");
    for n in [256i64, 1024, 4096] {
        let set = dense_interval(n);
        group.bench_with_input(BenchmarkId::new("interval", n), &set, |b, s| {
            b.iter(|| black_box(s.count_s_aps(3)))
        });
    }
    // Wide spans force the pairwise kernel instead of the bitset one.
    let sparse = sparse_random(512, 1 << 40, 0xbeef);
    group.bench_with_input(BenchmarkId::new("sparse", 512), &sparse, |b, s| {
        b.iter(|| black_box(s.count_s_aps(3)))
    });
    group.finish();
}

fn bench_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("rk_exact");
    for n in [16u32, 20, 24] {
        group.bench_with_input(BenchmarkId::new("k3", n), &n, |b, &n| {
            b.iter(|| {
                let mut cache = SolverCache::default();
                let mut budget = SearchBudget::unlimited();
                black_box(rk_exact(3, n, &mut cache, &mut budget, false).unwrap().value)
            })
        });
    }
    group.finish();
}

fn bench_graph(c: &mut Criterion) {
    let mut group = c.benchmark_group("ap_graph");
    for n in [128i64, 512] {
        let set = dense_interval(n);
        group.bench_with_input(BenchmarkId::new("build", n), &set, |b, s| {
            b.iter(|| black_box(ApGraph::build(s).edge_count()))
        });
    }
    let set = dense_interval(512);
    let graph = ApGraph::build(&set);
    group.bench_function("count_paths4_512", |b| {
        b.iter(|| black_box(graph.count_paths4(1, 511)))
    });
    group.finish();
}

fn bench_sumsets(c: &mut Criterion) {
    let set = dense_interval(1024);
    c.bench_function("iterated_sumset_2_1", |b| {
        b.iter(|| black_box(set.iterated_sumset(2, 1).len()))
    });
}

criterion_group!(benches, bench_count, bench_solver, bench_graph, bench_sumsets);
criterion_main!(benches);
