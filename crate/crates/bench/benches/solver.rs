use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dynabg::gmp::{pool_frame, pool_sequence};
use dynabg::segmentation::{segment_video, SegmentationConfig};
use dynabg::solver::{solve_rpca, solve_sc_rpca, svd_economy, svt, SolverConfig, WeightMode};
use dynabg::{detect, DetectionConfig, DetectionMode, PoolingConfig};
use dynabg_bench::{group_instance, rpca_instance, wave_frames};

fn linear_algebra(c: &mut Criterion) {
    let d = rpca_instance().d;
    c.bench_function("svd_economy 200x50", |b| {
        b.iter(|| svd_economy(black_box(&d)).unwrap())
    });
    c.bench_function("svt 200x50", |b| {
        b.iter(|| svt(black_box(&d), 5.0).unwrap())
    });
}

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    let plain = rpca_instance();
    let cfg = SolverConfig::default();
    g.bench_function("rpca 200x50", |b| {
        b.iter(|| solve_rpca(black_box(&plain.d), &cfg).unwrap())
    });
    let grouped = group_instance();
    g.bench_function("sc_rpca 200x50", |b| {
        b.iter(|| {
            solve_sc_rpca(
                black_box(&grouped.d),
                &grouped.partition,
                &cfg,
                WeightMode::Sqrt,
            )
            .unwrap()
        })
    });
    g.finish();
}

fn front_end(c: &mut Criterion) {
    let frames = wave_frames(30);
    let pooling = PoolingConfig::default();
    c.bench_function("pool_frame 64x64", |b| {
        b.iter(|| pool_frame(black_box(&frames.frames()[0]), &pooling))
    });
    let stable = pool_sequence(&frames, &pooling);
    let mut g = c.benchmark_group("video");
    g.sample_size(10);
    g.bench_function("segment_video 64x64x30", |b| {
        b.iter(|| segment_video(black_box(&stable), &SegmentationConfig::default()).unwrap())
    });
    g.bench_function("detect sc-rpca-stable 64x64x30", |b| {
        let cfg = DetectionConfig::with_mode(DetectionMode::ScRpcaStable);
        b.iter(|| detect(black_box(&frames), &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, linear_algebra, solvers, front_end);
criterion_main!(benches);
