use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cata_bench::fixture;
use cata_core::analysis::builtin;
use cata_core::oracle::{brute_force_sat, enumerate_trees, eval_cata, eval_flattened, Bounds, Interp, Value};

fn dirty_words_search(c: &mut Criterion) {
    let s = fixture("dirty-words.smt2");
    let f = s.formula();
    let interp = Interp::new().with_predicate("dirty", [Value::Str("dirty".into())]);
    let mut group = c.benchmark_group("brute force dirty words");
    for size in [3, 5, 7] {
        let bounds = Bounds::new(size, vec![Value::Str("clean".into()), Value::Str("dirty".into())]);
        group.bench_with_input(BenchmarkId::from_parameter(size), &bounds, |b, bounds| {
            b.iter(|| brute_force_sat(black_box(&f), &s.signature, &interp, bounds).unwrap().is_sat())
        });
    }
    group.finish();
}

fn cata_evaluation(c: &mut Criterion) {
    let domain = [Value::Int(1), Value::Int(2)];
    let trees: Vec<_> = enumerate_trees(7, &domain).collect();
    let interp = Interp::new();
    for name in ["SizeI", "Multiset", "Sortedness_dup"] {
        let (sig, cata) = builtin(name).unwrap();
        c.bench_function(&format!("eval {name}"), |b| {
            b.iter(|| {
                for t in &trees {
                    black_box(eval_cata(&cata, t, &sig, &interp).unwrap());
                }
            })
        });
        c.bench_function(&format!("eval {name} flattened"), |b| {
            b.iter(|| {
                for t in &trees {
                    black_box(eval_flattened(&cata, t, &sig, &interp).unwrap());
                }
            })
        });
    }
}

criterion_group!(benches, dirty_words_search, cata_evaluation);
criterion_main!(benches);
