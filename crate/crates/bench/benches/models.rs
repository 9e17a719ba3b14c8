//! Whole-graph cost per sample: forward and forward+backward for both
//! architectures at the evaluation scale (s = 64, 20 herbs).

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use facerx_bench::random_input;
use facerx_core::loss::bce_logit_grad;
use facerx_core::models::{Architecture, Model};
use facerx_core::{Rng, Tensor};

fn bench_models(c: &mut Criterion) {
    let mut group = c.benchmark_group("model_per_sample");
    group.sample_size(20);
    let input = random_input(64, 1);
    let target = Tensor::<f32>::from_vec(
        &[20],
        (0..20).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect(),
    )
    .unwrap();

    for arch in [Architecture::Conventional, Architecture::ThreeGrained] {
        let model = Model::<f32>::build(arch, 20, 64, &mut Rng::new(2)).unwrap();
        group.bench_function(format!("{arch}_forward"), |bench| {
            bench.iter(|| black_box(model.forward_eval(black_box(&input)).unwrap()));
        });
        group.bench_function(format!("{arch}_forward_backward"), |bench| {
            bench.iter(|| {
                let (heads, cache) =
                    model.forward_train(black_box(&input), &mut Rng::new(3)).unwrap();
                let grads: Vec<Tensor<f32>> =
                    heads.iter().map(|h| bce_logit_grad(h, &target).unwrap()).collect();
                black_box(model.backward(&cache, &grads).unwrap())
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_models);
criterion_main!(benches);
