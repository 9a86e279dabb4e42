use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lentil_core::constants::GeometryConstants;
use lentil_core::disentangle::{dedupe_spatial, separate, SeparateParams};
use lentil_core::geometry::{BoundaryGrid, ManifoldModel};
use lentil_core::io::{read_cloud, write_cloud};
use lentil_core::metricspace::{lgh_lower, manifold_snapshot, sample_manifold};
use lentil_core::observables::{assemble, default_obs_tol};
use lentil_core::par;
use lentil_core::reconstruct::window::{window_reconstruct, WindowParams};
use lentil_core::reconstruct::{sweep_epsilon1, Bound, ReconstructParams, ReconstructReport};
use lentil_core::scene::{forward, poisson_sources, ArrivalCloud, ForwardOptions, PoissonSpec, Window};

fn scene(mean: f64, t_max: f64, seed: u64) -> (ManifoldModel, BoundaryGrid, ArrivalCloud) {
    let model = ManifoldModel::euclidean_disk(1.0).unwrap();
    let grid = BoundaryGrid::for_model(&model, 512);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = PoissonSpec { intensity: mean / (t_max * model.total_volume()), t_max, density: None, margin: None };
    let sources = poisson_sources(&model, &spec, &mut rng).unwrap();
    let data = forward(&model, &sources, &grid, Window::unbounded(), ForwardOptions::default(), &mut rng).unwrap();
    (model, grid, data.cloud)
}

fn report(cloud: &ArrivalCloud, grid: &BoundaryGrid, constants: &GeometryConstants) -> ReconstructReport {
    let sep = separate(cloud, &SeparateParams::default()).unwrap();
    let functions = dedupe_spatial(&sep.functions, 1e-6).functions;
    let space = assemble(grid, &functions, default_obs_tol(grid)).unwrap();
    sweep_epsilon1(&space, constants, &ReconstructParams::default()).unwrap().report
}

#[test]
fn sequential_and_parallel_runs_agree_bitwise() {
    let (model, grid, cloud) = scene(60.0, 2.0, 1);
    let c = GeometryConstants::analytic(&model).unwrap();
    par::set_sequential(true);
    let a = report(&cloud, &grid, &c);
    par::set_sequential(false);
    let b = report(&cloud, &grid, &c);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn file_roundtrip_preserves_the_report() {
    let (model, grid, cloud) = scene(40.0, 2.0, 2);
    let c = GeometryConstants::analytic(&model).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cloud.csv");
    write_cloud(&path, &cloud).unwrap();
    let back = read_cloud(&path).unwrap();
    assert_eq!(back, cloud);
    assert_eq!(report(&back, &grid, &c), report(&cloud, &grid, &c));
}

#[test]
fn report_fields_are_consistent() {
    let (model, grid, cloud) = scene(80.0, 3.0, 3);
    let c = GeometryConstants::analytic(&model).unwrap();
    let r = report(&cloud, &grid, &c);
    if let (Bound::Finite(e), Bound::Finite(e2), Bound::Finite(d)) = (r.e, r.epsilon2, r.delta) {
        assert_eq!(e2, r.epsilon1 + e);
        assert_eq!(d, c.c9 * e2);
    }
    let json = serde_json::to_value(&r).unwrap();
    for key in ["epsilon1", "E", "epsilon2", "delta", "gamma_indices", "certificates", "epsilon_bound", "lgh_bound", "status"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn windows_grow_and_start_from_one_point() {
    let (model, _, cloud) = scene(30.0, 6.0, 4);
    let c = GeometryConstants::analytic(&model).unwrap();
    let res = window_reconstruct(&cloud, &[0.01, 3.0, 8.0, f64::INFINITY], &c, &WindowParams::default()).unwrap();
    assert!(res[0].is_one_point());
    assert_eq!(res[0].lgh_bound, Bound::Infinite);
    assert!(res.windows(2).all(|w| w[0].complete_graphs <= w[1].complete_graphs));
}

#[test]
fn snapshot_is_at_distance_zero_from_itself() {
    let model = ManifoldModel::curved_disk(-1.0, 0.6).unwrap();
    let grid = BoundaryGrid::for_model(&model, 64);
    let pts = sample_manifold(&model, 40, &mut ChaCha8Rng::seed_from_u64(5));
    let (snap, points) = manifold_snapshot(&model, &grid, &pts).unwrap();
    assert_eq!(points.len(), 40 + 64);
    snap.check_metric(1e-9).unwrap();
    let b = lgh_lower(&snap, &snap).unwrap();
    assert_eq!((b.lower, b.upper), (0.0, 0.0));
    assert!(pts.iter().all(|p| p.norm() <= model.radius()));
}
