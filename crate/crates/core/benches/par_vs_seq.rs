//! Sequential against data-parallel execution on the parallelized kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng as _;

use pgf_core::coeffs::{Ring, RingTag};
use pgf_core::descent::{fixed_space, TrivializationLevel};
use pgf_core::etale::EtaleModule;
use pgf_core::koszul::truncation_instance;
use pgf_core::linalg::{self, Mat};
use pgf_core::par::Exec;
use pgf_core::random;
use pgf_core::series::Window;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn rref(c: &mut Criterion) {
    let mut rng = random::rng(1);
    let n = 400;
    let a = Mat::from_rows(&(0..n).map(|_| (0..n).map(|_| rng.gen_range(0..3)).collect()).collect::<Vec<_>>());
    let mut g = c.benchmark_group("kernel_mod_p_400");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| linalg::kernel_mod_p(black_box(&a), 3, e))
        });
    }
    g.finish();
}

fn koszul(c: &mut Criterion) {
    let inst = truncation_instance(2, 2, 4, 2).unwrap();
    let mut g = c.benchmark_group("koszul_truncation");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| black_box(&inst).cohomology_dims_with(e))
        });
    }
    g.finish();
}

fn fixed(c: &mut Criterion) {
    let r = Ring::new(RingTag::base(2, 2, &["a", "b"]).unwrap()).unwrap();
    let m = EtaleModule::trivial(&r, &Window::uniform(2, -2, 20), 2, &[]).unwrap();
    let level = TrivializationLevel::new(vec![2, 2], Window::uniform(2, -1, 4)).unwrap();
    let mut g = c.benchmark_group("fixed_space");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| fixed_space(black_box(&m), &level, e).unwrap())
        });
    }
    g.finish();
}

fn consistency(c: &mut Criterion) {
    let r = Ring::new(RingTag::base(3, 1, &["a", "b", "c"]).unwrap()).unwrap();
    let mut rng = random::rng(2);
    let m = random::random_consistent_module(&mut rng, &r, &Window::uniform(3, -2, 10), 2, true).unwrap();
    let mut g = c.benchmark_group("consistency");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| black_box(&m).check_consistency_with(e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, rref, koszul, fixed, consistency);
criterion_main!(benches);
