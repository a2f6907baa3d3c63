//! Sequential vs data-parallel throughput on the pipeline's heavy stages:
//! pairwise distance assembly, multi-start sampling, and a full analysis.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nltop::embedding::squared_cosine_distance_matrix;
use nltop::experiment::{analyze_samples, EmbeddingMethod};
use nltop::problem::{presets, ObjectiveKind, ObjectiveSpec};
use nltop::sampler::{run_sampling, Sample, SamplingConfig};
use nltop::ExecMode;

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

fn random_designs(count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(1e-6..1.0)).collect())
        .collect()
}

fn bench_distance_matrix(c: &mut Criterion) {
    let designs = random_designs(96, 1800);
    let refs: Vec<&[f64]> = designs.iter().map(|d| d.as_slice()).collect();
    let mut group = c.benchmark_group("distance-matrix");
    group.measurement_time(Duration::from_secs(4));
    for (label, mode) in MODES {
        group.bench_function(BenchmarkId::new(label, "96x1800"), |b| {
            b.iter(|| squared_cosine_distance_matrix(&refs, mode).unwrap())
        });
    }
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let objective = ObjectiveSpec::new(ObjectiveKind::Compliance, 1.0).unwrap();
    let problem = presets::cantilever(12, 20, objective, 0.5, 1.8).unwrap();
    let config = SamplingConfig {
        num_starts: 4,
        t_fix: 2,
        max_iter: 6,
        save_interval: 3,
        ..SamplingConfig::default()
    };
    let mut group = c.benchmark_group("multi-start-sampling");
    group.sample_size(10);
    group.measurement_time(Duration::from_secs(8));
    for (label, mode) in MODES {
        group.bench_function(BenchmarkId::new(label, "12x20-5-groups"), |b| {
            b.iter(|| run_sampling(&problem, &config, mode).unwrap())
        });
    }
    group.finish();
}

fn bench_analysis(c: &mut Criterion) {
    let designs = random_designs(120, 600);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let samples: Vec<Sample> = designs
        .into_iter()
        .enumerate()
        .map(|(i, design)| {
            let j = rng.gen_range(1.0..9.0);
            Sample {
                group_id: i / 6,
                iteration: (i % 6) * 20,
                is_reference: false,
                design,
                raw_j: j,
                clipped_j: j,
            }
        })
        .collect();
    let refs: Vec<&Sample> = samples.iter().collect();
    let mut group = c.benchmark_group("embed-envelope-index");
    group.measurement_time(Duration::from_secs(4));
    for (label, mode) in MODES {
        group.bench_function(BenchmarkId::new(label, "120-samples"), |b| {
            b.iter(|| analyze_samples(&refs, EmbeddingMethod::CosineMds, 20, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_distance_matrix, bench_sampling, bench_analysis);
criterion_main!(benches);
