use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lentil_core::constants::GeometryConstants;
use lentil_core::disentangle::{separate, SeparateParams};
use lentil_core::geometry::{BoundaryGrid, ManifoldModel};
use lentil_core::metricspace::{lgh_lower, LabeledMetricSpace};
use lentil_core::observables::{assemble, default_obs_tol};
use lentil_core::par;
use lentil_core::reconstruct::{sweep_epsilon1, ReconstructParams};
use lentil_core::scene::{forward, poisson_sources, ForwardOptions, PoissonSpec, Window};

fn pipeline(c: &mut Criterion) {
    let model = ManifoldModel::euclidean_disk(1.0).unwrap();
    let grid = BoundaryGrid::for_model(&model, 1024);
    let constants = GeometryConstants::analytic(&model).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = PoissonSpec { intensity: 150.0 / (5.0 * std::f64::consts::PI), t_max: 5.0, density: None, margin: None };
    let sources = poisson_sources(&model, &spec, &mut rng).unwrap();
    let data = forward(&model, &sources, &grid, Window::unbounded(), ForwardOptions::default(), &mut rng).unwrap();
    let sep = separate(&data.cloud, &SeparateParams::default()).unwrap();
    let space = assemble(&grid, &sep.functions, default_obs_tol(&grid)).unwrap();
    let rec = sweep_epsilon1(&space, &constants, &ReconstructParams::default()).unwrap();
    let x = LabeledMetricSpace::new(space.dist.clone(), rec.alpha.clone().unwrap_or_else(|| vec![0; grid.n])).unwrap();

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for (mode, sequential) in [("parallel", false), ("sequential", true)] {
        par::set_sequential(sequential);
        group.bench_function(BenchmarkId::new("separate", mode), |b| b.iter(|| separate(black_box(&data.cloud), &SeparateParams::default()).unwrap()));
        group.bench_function(BenchmarkId::new("assemble", mode), |b| b.iter(|| assemble(&grid, black_box(&sep.functions), default_obs_tol(&grid)).unwrap()));
        group.bench_function(BenchmarkId::new("sweep_epsilon1", mode), |b| {
            b.iter(|| sweep_epsilon1(black_box(&space), &constants, &ReconstructParams::default()).unwrap())
        });
        group.bench_function(BenchmarkId::new("lgh_self_bracket", mode), |b| b.iter(|| lgh_lower(black_box(&x), &x).unwrap()));
    }
    par::set_sequential(false);
    group.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
