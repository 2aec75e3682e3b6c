use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cata_bench::{corpus, diseq_chain};
use cata_core::normalizer::Normalizer;

fn corpus_standard_form(c: &mut Criterion) {
    let scripts = corpus();
    c.bench_function("standard form of corpus", |b| {
        b.iter(|| {
            for (_, s) in &scripts {
                let f = s.formula();
                let _ = black_box(Normalizer::new(&s.signature).to_standard_form(&f));
            }
        })
    });
}

fn disequality_chains(c: &mut Criterion) {
    let mut group = c.benchmark_group("disequality chain");
    for n in [1, 2, 3, 4] {
        let s = diseq_chain(n);
        let f = s.formula();
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| Normalizer::new(&s.signature).to_standard_form(black_box(f)).unwrap().len())
        });
    }
    group.finish();
}

criterion_group!(benches, corpus_standard_form, disequality_chains);
criterion_main!(benches);
