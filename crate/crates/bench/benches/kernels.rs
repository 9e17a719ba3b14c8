//! Throughput of the dense kernels on the shapes convolution actually
//! feeds them: same-padding 3x3 patch matrices against small kernel blocks.

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;

use facerx_bench::random_matrix;
use facerx_core::layers::{Activation, ConvLayer};
use facerx_core::linalg::{matmul, matmul_at, matmul_bt};
use facerx_core::{Rng, Tensor};

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    // (label, m, k, n): forward GEMMs of the two architectures at s = 64.
    for (label, m, k, n) in [
        ("face_conv1_4096x27x16", 4096, 27, 16),
        ("face_conv2_1024x144x32", 1024, 144, 32),
        ("region_fuse_256x720x32", 256, 720, 32),
        ("conv3_256x576x128", 256, 576, 128),
    ] {
        let a = random_matrix(m, k, 1);
        let b = random_matrix(k, n, 2);
        group.throughput(Throughput::Elements((m * k * n) as u64));
        group.bench_function(label, |bench| {
            bench.iter(|| black_box(matmul(black_box(&a), black_box(&b), m, k, n)));
        });
    }
    group.finish();
}

fn bench_backward_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul_backward");
    let (m, k, n) = (256usize, 720usize, 32usize);
    let col = random_matrix(m, k, 3);
    let grad = random_matrix(m, n, 4);
    group.throughput(Throughput::Elements((m * k * n) as u64));
    group.bench_function("kernel_grad_at_256x720x32", |bench| {
        bench.iter(|| black_box(matmul_at(black_box(&col), black_box(&grad), m, k, n)));
    });
    let kernels = random_matrix(k, n, 5);
    group.bench_function("input_grad_bt_256x32x720", |bench| {
        bench.iter(|| black_box(matmul_bt(black_box(&grad), black_box(&kernels), m, n, k)));
    });
    group.finish();
}

fn bench_conv_layer(c: &mut Criterion) {
    let mut group = c.benchmark_group("conv3x3");
    for (label, size, in_ch, out_ch) in
        [("64x64x3_to_32", 64usize, 3usize, 32usize), ("16x16x80_to_32", 16, 80, 32)]
    {
        let mut rng = Rng::new(7);
        let layer = ConvLayer::<f32>::new(3, 3, in_ch, out_ch, &mut rng).unwrap();
        let x = Tensor::uniform(&mut rng, &[size, size, in_ch], 0.0, 1.0).unwrap();
        group.bench_function(format!("forward_{label}"), |bench| {
            bench.iter(|| black_box(layer.forward(black_box(&x), Activation::Relu).unwrap()));
        });
        let (out, cache) = layer.forward(&x, Activation::Relu).unwrap();
        let grad = Tensor::ones(out.shape()).unwrap();
        group.bench_function(format!("backward_{label}"), |bench| {
            bench.iter(|| black_box(layer.backward(black_box(&grad), &cache).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_matmul, bench_backward_kernels, bench_conv_layer);
criterion_main!(benches);
