use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qshadow::cy::{simplex_amplitude, FloatArith, Tables};
use qshadow::shadow::shipped_shadow;
use qshadow::simplicial::{homology, shipped};
use qshadow::{builtin, cy_state_sum, shadow_state_sum, CyOptions, Strategy};

fn amplitude(c: &mut Criterion) {
    let fib = builtin("fibonacci").unwrap();
    let t = Tables::new(FloatArith, &fib);
    let x = [1; 10];
    let m = [1; 5];
    c.bench_function("simplex amplitude fibonacci", |b| b.iter(|| simplex_amplitude(&t, black_box(&x), black_box(&m), 1)));
}

fn cy_s4(c: &mut Criterion) {
    let s4 = shipped("s4").unwrap();
    let mut g = c.benchmark_group("cy s4");
    g.sample_size(10);
    for (cat, strategy) in [("semion", Strategy::Backtracking), ("pointed(3,1)", Strategy::Cocycle), ("ising", Strategy::Backtracking)] {
        let cat = builtin(cat).unwrap();
        let opts = CyOptions { strategy, ..CyOptions::default() };
        g.bench_function(format!("{} {}", cat.name, strategy), |b| b.iter(|| cy_state_sum(&s4, &cat, &opts).unwrap()));
    }
    g.finish();
}

fn shadows(c: &mut Criterion) {
    let fib = builtin("fibonacci").unwrap();
    for name in ["s2_p1", "torus_0", "s2p1_plus_s2m1"] {
        let p = shipped_shadow(name).unwrap();
        c.bench_function(&format!("shadow {} fibonacci", name), |b| b.iter(|| shadow_state_sum(&p, &fib).unwrap()));
    }
}

fn smith(c: &mut Criterion) {
    let cp2 = shipped("cp2_9").unwrap();
    let facets: Vec<Vec<usize>> = cp2.facets().iter().map(|f| f.to_vec()).collect();
    c.bench_function("homology cp2_9", |b| b.iter(|| homology(black_box(&facets), 4)));
}

criterion_group!(benches, amplitude, cy_s4, shadows, smith);
criterion_main!(benches);
