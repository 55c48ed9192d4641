use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use vqic_core::codebook::{train_root_with, LloydParams};
use vqic_core::pipeline::{decode_stream, encode_image};
use vqic_core::{
    analyze, apply_mask, decode_indices, encode_indices, quantize, restore, synth, synthesize, train_predictor,
    Codebook, Image, LatentGrid, TransformSpec,
};

const W: usize = 768;
const H: usize = 512;

struct Setup {
    spec: TransformSpec,
    image: Image,
    grid: LatentGrid,
    codebooks: Vec<Codebook>,
}

fn setup() -> Setup {
    let spec = TransformSpec::new(64).unwrap();
    let training: Vec<LatentGrid> = synth::corpus(3, W, H, 1).iter().map(|i| analyze(i, &spec)).collect();
    let params = LloydParams { max_iters: 5, ..LloydParams::default() };
    let codebooks = [8, 256, 2048]
        .iter()
        .map(|&k| train_root_with(&training, k, 1, &params).unwrap().codebook)
        .collect();
    let image = synth::natural_image(W, H, 99);
    let grid = analyze(&image, &spec);
    Setup {
        spec,
        image,
        grid,
        codebooks,
    }
}

fn transform(c: &mut Criterion, s: &Setup) {
    let mut g = c.benchmark_group("transform");
    g.throughput(Throughput::Elements((W * H) as u64));
    g.bench_function("analyze_768x512", |b| b.iter(|| analyze(black_box(&s.image), &s.spec)));
    g.bench_function("synthesize_768x512", |b| {
        b.iter(|| synthesize(black_box(&s.grid), &s.spec, H, W).unwrap())
    });
    g.finish();
}

fn quantizer(c: &mut Criterion, s: &Setup) {
    let mut g = c.benchmark_group("quantize");
    g.throughput(Throughput::Elements(s.grid.cells() as u64));
    for cb in &s.codebooks {
        g.bench_with_input(BenchmarkId::from_parameter(cb.size()), cb, |b, cb| {
            b.iter(|| quantize(black_box(&s.grid), cb).unwrap())
        });
    }
    g.finish();
}

fn entropy(c: &mut Criterion, s: &Setup) {
    let mut g = c.benchmark_group("entropy");
    for cb in &s.codebooks {
        let indices = quantize(&s.grid, cb).unwrap();
        let payload = encode_indices(indices.indices(), cb.size()).unwrap();
        g.throughput(Throughput::Elements(indices.len() as u64));
        g.bench_with_input(BenchmarkId::new("encode", cb.size()), &indices, |b, im| {
            b.iter(|| encode_indices(black_box(im.indices()), cb.size()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("decode", cb.size()), &payload, |b, p| {
            b.iter(|| decode_indices(black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn end_to_end(c: &mut Criterion, s: &Setup) {
    let cb = &s.codebooks[1];
    let stream = encode_image(&s.image, &s.spec, cb).unwrap().stream;
    let mut g = c.benchmark_group("pipeline");
    g.bench_function("encode_768x512_K256", |b| b.iter(|| encode_image(black_box(&s.image), &s.spec, cb).unwrap()));
    g.bench_function("decode_768x512_K256", |b| b.iter(|| decode_stream(black_box(&stream), cb).unwrap()));
    g.finish();
}

fn restoration(c: &mut Criterion, s: &Setup) {
    let cb = &s.codebooks[1];
    let maps: Vec<_> = synth::corpus(6, W, H, 300)
        .iter()
        .map(|i| quantize(&analyze(i, &s.spec), cb).unwrap())
        .collect();
    let model = train_predictor(&maps, cb.size()).unwrap();
    let im = quantize(&s.grid, cb).unwrap();
    let mut g = c.benchmark_group("restore");
    for alpha in [0.1, 0.4] {
        let masked = apply_mask(&im, alpha, 7);
        g.bench_with_input(BenchmarkId::new("K256", alpha), &masked, |b, m| {
            b.iter(|| restore(black_box(m), &model).unwrap())
        });
    }
    g.finish();
}

fn benches(c: &mut Criterion) {
    let s = setup();
    transform(c, &s);
    quantizer(c, &s);
    entropy(c, &s);
    end_to_end(c, &s);
    restoration(c, &s);
}

criterion_group! {
    name = codec;
    config = Criterion::default().sample_size(20);
    targets = benches
}
criterion_main!(codec);
