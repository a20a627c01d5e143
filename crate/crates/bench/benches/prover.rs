use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use lemsyn_bench::corpus_spec;
use lemsyn_core::eval::falsify;
use lemsyn_core::lang::{parse_term, sym, Type};
use lemsyn_core::synth::{enumerate, make_tasks};
use lemsyn_core::{engine::prove_here, EngineConfig, SynthConfig};

fn proofs(c: &mut Criterion) {
    let config = EngineConfig::default();
    let mut group = c.benchmark_group("prove");
    for name in ["sum_rev", "sum_rev_sort", "sapp_swap", "plus3_plus", "rev_rev"] {
        let spec = corpus_spec(name);
        group.bench_function(name, |b| b.iter(|| prove_here(black_box(&spec), &config).unwrap()));
    }
    group.finish();
}

fn synthesis(c: &mut Criterion) {
    let spec = corpus_spec("sum_rev");
    let p = parse_term("sum (rev a)", &spec).unwrap();
    let types = BTreeMap::from([(sym("a"), Type::Adt(sym("List")))]);
    let config = SynthConfig::default();
    let tasks = make_tasks(&p, &sym("a"), &types, &spec, &config).unwrap();
    c.bench_function("synth/comb h + r", |b| {
        b.iter(|| enumerate(black_box(&tasks[1]), &spec, &config).unwrap())
    });
}

fn falsification(c: &mut Criterion) {
    let spec = corpus_spec("rev_is_identity");
    c.bench_function("falsify/rev xs = xs", |b| {
        b.iter(|| falsify(black_box(&spec.goal), &spec, 100, 0).unwrap())
    });
}

criterion_group!(benches, proofs, synthesis, falsification);
criterion_main!(benches);
