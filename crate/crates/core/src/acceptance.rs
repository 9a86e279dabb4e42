//! The acceptance suite: ten end-to-end checks against ground truth.
//!
//! Each criterion builds its own scenes from a seed and returns one
//! [`Outcome`]. Shared by the `acceptance` test target and `lentil selftest`.

use std::fmt;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson as PoissonPmf};

use crate::constants::GeometryConstants;
use crate::disentangle::{association_accuracy, dedupe_spatial, jet_separations, separate, ArrivalFunction, SeparateParams};
use crate::geometry::{boundary_distance_function, BoundaryGrid, ManifoldModel, Vec2};
use crate::metricspace::{lgh_exact, sampled_lgh_vs_manifold, LabeledMetricSpace};
use crate::observables::{assemble, default_obs_tol, DiscreteSpace};
use crate::reconstruct::checks::{lentil_geometry_checks, LentilCheckParams};
use crate::reconstruct::reverse::{reverse_check, ReverseParams};
use crate::reconstruct::window::{window_reconstruct, WindowParams};
use crate::reconstruct::{estimate_proximity, sweep_epsilon1, Bound, ReconstructParams, Reconstruction, Status};
use crate::scene::{forward, poisson_sources, ArrivalCloud, ForwardData, ForwardOptions, PoissonSpec, SpacetimeSource, Window};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceConfig {
    pub seed: u64,
    pub grid: usize,
    /// Shrinks every sample count for smoke runs; the verdicts of a quick
    /// run are not the acceptance verdicts.
    pub quick: bool,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig { seed: 20240601, grid: 1024, quick: false }
    }
}

impl AcceptanceConfig {
    fn count(&self, full: usize, quick: usize) -> usize {
        if self.quick {
            quick
        } else {
            full
        }
    }

    fn rng(&self, criterion: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(1_000_003).wrapping_add(criterion))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<28} {}  ({:.1}s) {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.seconds,
            self.detail
        )
    }
}

pub const NAMES: [&str; 10] = [
    "distance recovery",
    "association",
    "proximity soundness",
    "certified density soundness",
    "reverse completeness",
    "lgh bracket",
    "convergence",
    "lentil geometry",
    "poisson statistics",
    "equivariance",
];

type Verdict = Result<(bool, String), String>;

pub fn run_criterion(id: u8, cfg: &AcceptanceConfig) -> Outcome {
    let start = Instant::now();
    let verdict: Verdict = match id {
        1 => distance_recovery(cfg),
        2 => association(cfg),
        3 => proximity_soundness(cfg),
        4 => density_soundness(cfg),
        5 => reverse_completeness(cfg),
        6 => lgh_bracket(cfg),
        7 => convergence(cfg),
        8 => lentil_geometry(cfg),
        9 => poisson_statistics(cfg),
        10 => equivariance(cfg),
        _ => Err(format!("no criterion {id}")),
    };
    let (pass, detail) = verdict.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome {
        id,
        name: NAMES.get(id as usize - 1).copied().unwrap_or("?").to_string(),
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every criterion in order, reporting each as it finishes.
pub fn run_all(cfg: &AcceptanceConfig, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    (1..=10)
        .map(|id| {
            let o = run_criterion(id, cfg);
            report(&o);
            o
        })
        .collect()
}

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

fn unit_disk() -> Result<ManifoldModel, String> {
    ManifoldModel::euclidean_disk(1.0).map_err(err)
}

fn hyperbolic_disk() -> Result<ManifoldModel, String> {
    ManifoldModel::curved_disk(-1.0, 0.6).map_err(err)
}

fn random_sources<R: Rng>(model: &ManifoldModel, count: usize, max_fraction: f64, tau: (f64, f64), rng: &mut R) -> Vec<SpacetimeSource> {
    let r = model.radius() * max_fraction;
    (0..count)
        .map(|id| SpacetimeSource {
            id,
            position: Vec2::from_polar(r * rng.random::<f64>().sqrt(), rng.random::<f64>() * std::f64::consts::TAU),
            time: tau.0 + (tau.1 - tau.0) * rng.random::<f64>(),
        })
        .collect()
}

/// Blind pipeline up to the discrete space.
fn recover(cloud: &ArrivalCloud, grid: &BoundaryGrid) -> Result<(Vec<ArrivalFunction>, DiscreteSpace), String> {
    let sep = separate(cloud, &SeparateParams::default()).map_err(err)?;
    let functions = dedupe_spatial(&sep.functions, 1e-6).functions;
    let space = assemble(grid, &functions, default_obs_tol(grid)).map_err(err)?;
    Ok((functions, space))
}

/// Ground-truth source of each recovered function: the source whose
/// boundary distance function differs from it by a constant.
pub fn match_truth(model: &ManifoldModel, grid: &BoundaryGrid, functions: &[ArrivalFunction], sources: &[SpacetimeSource]) -> Result<Vec<usize>, String> {
    let truth: Vec<Vec<f64>> = sources
        .iter()
        .map(|s| boundary_distance_function(model, s.position, grid))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    functions
        .iter()
        .map(|f| {
            let mut best = (f64::INFINITY, 0);
            for (k, r) in truth.iter().enumerate() {
                let (lo, hi) = f.values.iter().zip(r).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (v, d)| (a.min(v - d), b.max(v - d)));
                if hi - lo < best.0 {
                    best = (hi - lo, k);
                }
            }
            if best.0 < 1e-6 {
                Ok(best.1)
            } else {
                Err(format!("recovered function {} matches no source (residual {:.2e})", f.tag, best.0))
            }
        })
        .collect()
}

/// Ground-truth source of each sample: the one whose arrival time at the
/// sample's node is closest.
pub fn sample_labels(model: &ManifoldModel, cloud: &ArrivalCloud, sources: &[SpacetimeSource]) -> Result<Vec<usize>, String> {
    let grid = cloud.header.grid();
    let arrivals: Vec<Vec<f64>> = crate::par::try_map_slice(sources, |s| {
        boundary_distance_function(model, s.position, &grid).map(|r| r.into_iter().map(|d| d + s.time).collect())
    })
    .map_err(err)?;
    Ok(cloud
        .samples
        .iter()
        .map(|smp| {
            let node = grid.locate(smp.boundary_param).node % grid.n;
            let mut best = (f64::INFINITY, 0);
            for (k, a) in arrivals.iter().enumerate() {
                let gap = (a[node] - smp.time).abs();
                if gap < best.0 {
                    best = (gap, k);
                }
            }
            sources[best.1].id
        })
        .collect())
}

fn distance_recovery(cfg: &AcceptanceConfig) -> Verdict {
    let mut rng = cfg.rng(1);
    let mut parts = Vec::new();
    let mut pass = true;
    for (label, model) in [("euclidean", unit_disk()?), ("hyperbolic", hyperbolic_disk()?)] {
        let grid = BoundaryGrid::for_model(&model, cfg.grid);
        let sources = random_sources(&model, 20, 0.9, (0.0, 1.0), &mut rng);
        let data = forward(&model, &sources, &grid, Window::unbounded(), ForwardOptions::default(), &mut rng).map_err(err)?;
        let (functions, space) = recover(&data.cloud, &grid)?;
        let truth = match_truth(&model, &grid, &functions, &sources)?;
        let tol = 2.0 * grid.spacing() + 3.0 * model.tol_dist();
        let (mut dist_err, mut time_err) = (0.0f64, 0.0f64);
        for i in 0..space.len() {
            for j in 0..space.len() {
                let (a, b) = (&sources[truth[i]], &sources[truth[j]]);
                dist_err = dist_err.max((space.dist[i][j] - model.distance(a.position, b.position).map_err(err)?).abs());
                time_err = time_err.max((space.time_diffs[i][j] - (a.time - b.time)).abs());
            }
        }
        let ok = space.len() == 20 && dist_err <= tol && time_err <= space.obs_tol;
        pass &= ok;
        parts.push(format!(
            "{label}: {} points, max dist err {dist_err:.2e} (tol {tol:.2e}), max time err {time_err:.2e} (tol {:.2e})",
            space.len(),
            space.obs_tol
        ));
    }
    Ok((pass, parts.join("; ")))
}

/// Scenes whose graphs cross and whose crossings are well separated in 2-jet.
fn crossing_scene<R: Rng>(model: &ManifoldModel, grid: &BoundaryGrid, rng: &mut R) -> Result<Option<Vec<SpacetimeSource>>, String> {
    let count = rng.random_range(3..=6);
    let sources = random_sources(model, count, 0.9, (0.0, 0.6), rng);
    let functions: Vec<Vec<f64>> = sources
        .iter()
        .map(|s| boundary_distance_function(model, s.position, grid).map(|r| r.into_iter().map(|d| d + s.time).collect()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let n = grid.n;
    let crosses = (0..count).any(|a| {
        (0..count).any(|b| a < b && (0..n).any(|i| (functions[a][i] - functions[b][i]).signum() != (functions[a][(i + 1) % n] - functions[b][(i + 1) % n]).signum()))
    });
    let seps = jet_separations(&functions, grid.spacing(), &SeparateParams::default());
    let separated = seps.iter().all(|s| s.gap > 10.0 * s.tolerance);
    Ok((crosses && separated).then_some(sources))
}

fn association(cfg: &AcceptanceConfig) -> Verdict {
    let mut rng = cfg.rng(2);
    let model = unit_disk()?;
    let grid = BoundaryGrid::for_model(&model, cfg.grid);
    let scenes_wanted = cfg.count(20, 4);
    let (mut scenes, mut attempts, mut worst, mut perm_failures) = (0, 0, 1.0f64, 0);
    while scenes < scenes_wanted {
        attempts += 1;
        if attempts > 100 * scenes_wanted {
            return Err(format!("only {scenes} admissible crossing scenes in {attempts} draws"));
        }
        let Some(sources) = crossing_scene(&model, &grid, &mut rng)? else { continue };
        scenes += 1;
        let data = forward(&model, &sources, &grid, Window::unbounded(), ForwardOptions::default(), &mut rng).map_err(err)?;
        let sep = separate(&data.cloud, &SeparateParams::default()).map_err(err)?;
        let acc = association_accuracy(&sep, &data.cloud, &data.labels);
        worst = worst.min(if acc.recovered == acc.true_sources { acc.accuracy } else { 0.0 });
        for _ in 0..5 {
            let mut order: Vec<usize> = (0..data.cloud.samples.len()).collect();
            order.shuffle(&mut rng);
            let shuffled = ArrivalCloud {
                header: data.cloud.header.clone(),
                samples: order.iter().map(|&k| data.cloud.samples[k]).collect(),
            };
            let again = separate(&shuffled, &SeparateParams::default()).map_err(err)?;
            if again.functions != sep.functions {
                perm_failures += 1;
            }
        }
    }
    Ok((
        worst == 1.0 && perm_failures == 0,
        format!("{scenes} scenes ({attempts} draws), worst accuracy {worst:.4}, {perm_failures}/{} shuffles changed the partition", 5 * scenes),
    ))
}

fn proximity_soundness(cfg: &AcceptanceConfig) -> Verdict {
    let mut rng = cfg.rng(3);
    let params = ReconstructParams::default();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut checked = 0;
    let mut violations = 0;
    let (mut ratio_lo, mut ratio_hi, mut sharp_n) = (f64::INFINITY, 0.0f64, 0);
    let mut parts = Vec::new();
    for (label, model) in [("euclidean", unit_disk()?), ("hyperbolic", hyperbolic_disk()?)] {
        let grid = BoundaryGrid::for_model(&model, cfg.grid);
        let constants = GeometryConstants::analytic(&model).map_err(err)?;
        let euclidean = label == "euclidean";
        for k in 0..cfg.count(100, 10) / 2 {
            // Depths spread over the range where E is finite.
            let depth = 0.02 + 0.4 * model.radius() * rng.random::<f64>();
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let chart_r = chart_radius_at_depth(&model, depth)?;
            let p = Vec2::from_polar(chart_r, theta);
            let values = boundary_distance_function(&model, p, &grid).map_err(err)?;
            let f = ArrivalFunction { tag: k, values };
            let est = estimate_proximity(&grid, &[f], &constants, params.stencil).map_err(err)?;
            for c in &est.sources[0].critical {
                let (Bound::Finite(e), Bound::Finite(allow)) = (c.e, c.allowance) else { continue };
                let y = model.boundary_point(c.location.param(&grid));
                let d = model.distance(p, y).map_err(err)?;
                checked += 1;
                let excess = d - e - 5.0 * allow;
                worst_excess = worst_excess.max(excess);
                if excess > 0.0 {
                    violations += 1;
                }
                if euclidean && (0.02..=0.3).contains(&d) && c.location.node == nearest_node(&grid, &model, p)? {
                    sharp_n += 1;
                    ratio_lo = ratio_lo.min(e / d);
                    ratio_hi = ratio_hi.max(e / d);
                }
            }
        }
        parts.push(label);
    }
    let soundness = violations == 0 && checked > 0;
    let sharp = sharp_n > 0 && ratio_lo >= 1.0 && ratio_hi <= 1.1;
    Ok((
        soundness && sharp,
        format!(
            "soundness {} ({checked} critical points, {violations} violations, max d − E − 5·allowance {worst_excess:.2e}); \
             sharpness {} (E/d over {sharp_n} nearest points in [{ratio_lo:.4}, {ratio_hi:.4}], required [1, 1.1])",
            if soundness { "PASS" } else { "FAIL" },
            if sharp { "PASS" } else { "FAIL" },
        ),
    ))
}

/// Chart radius of the points at metric depth `depth` below `∂M` (radial models).
fn chart_radius_at_depth(model: &ManifoldModel, depth: f64) -> Result<f64, String> {
    let (mut lo, mut hi) = (0.0, model.radius());
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let d = model.distance_to_boundary(Vec2::new(mid, 0.0)).map_err(err)?.0;
        if d > depth {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn nearest_node(grid: &BoundaryGrid, model: &ManifoldModel, p: Vec2) -> Result<usize, String> {
    let (_, foot) = model.distance_to_boundary(p).map_err(err)?;
    Ok(grid.locate(model.boundary_arclength(foot.angle())).node % grid.n)
}

/// Largest distance from sampled points of `M` to the nearest source.
pub fn true_density<R: Rng>(model: &ManifoldModel, points: &[Vec2], samples: usize, rng: &mut R) -> Result<f64, String> {
    let probes = crate::metricspace::sample_manifold(model, samples, rng);
    let len = model.boundary_length();
    let mut all = probes;
    all.extend((0..samples / 10).map(|k| model.boundary_point(len * k as f64 / (samples / 10) as f64)));
    let gaps = crate::par::try_map_slice(&all, |z| {
        points.iter().try_fold(f64::INFINITY, |m, p| model.distance(*z, *p).map(|d| m.min(d)))
    })
    .map_err(err)?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

struct CertifiedScene {
    model: ManifoldModel,
    grid: BoundaryGrid,
    space: DiscreteSpace,
    rec: Reconstruction,
    /// Every source of the scene.
    positions: Vec<Vec2>,
    /// Recovered functions that match no single source.
    unmatched: usize,
}

fn poisson_scene(model: &ManifoldModel, grid: &BoundaryGrid, mean: f64, t_max: f64, rng: &mut ChaCha8Rng) -> Result<(ForwardData, Vec<SpacetimeSource>), String> {
    let spec = PoissonSpec {
        intensity: mean / (t_max * model.total_volume()),
        t_max,
        density: None,
        margin: None,
    };
    let sources = poisson_sources(model, &spec, rng).map_err(err)?;
    let data = forward(model, &sources, grid, Window::unbounded(), ForwardOptions::default(), rng).map_err(err)?;
    Ok((data, sources))
}

/// Poisson scenes run through the blind pipeline with the `ε₁` sweep.
fn certified_scenes(cfg: &AcceptanceConfig, stream: u64, scenes: usize) -> Result<Vec<CertifiedScene>, String> {
    let mut rng = cfg.rng(stream);
    let model = unit_disk()?;
    let grid = BoundaryGrid::for_model(&model, cfg.grid);
    let constants = GeometryConstants::analytic(&model).map_err(err)?;
    let mut out = Vec::new();
    for _ in 0..scenes {
        let (data, sources) = poisson_scene(&model, &grid, cfg.count(180, 120) as f64, 5.0, &mut rng)?;
        let (functions, space) = recover(&data.cloud, &grid)?;
        let unmatched = functions.iter().filter(|f| match_truth(&model, &grid, std::slice::from_ref(*f), &sources).is_err()).count();
        let rec = sweep_epsilon1(&space, &constants, &ReconstructParams::default()).map_err(err)?;
        out.push(CertifiedScene {
            model: model.clone(),
            grid,
            space,
            rec,
            positions: sources.iter().map(|s| s.position).collect(),
            unmatched,
        });
    }
    Ok(out)
}

fn density_soundness(cfg: &AcceptanceConfig) -> Verdict {
    let scenes = certified_scenes(cfg, 4, cfg.count(10, 2))?;
    let mut rng = cfg.rng(40);
    let (mut certified, mut violations) = (0, 0);
    let mut ratios = Vec::new();
    for s in &scenes {
        let r = &s.rec.report;
        if r.status != Status::Pass {
            continue;
        }
        let Bound::Finite(eps) = r.epsilon_bound else { continue };
        certified += 1;
        let measured = true_density(&s.model, &s.positions, cfg.count(10_000, 2_000), &mut rng)?;
        ratios.push(measured / eps);
        if measured > eps {
            violations += 1;
        }
    }
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let unmatched: usize = scenes.iter().map(|s| s.unmatched).sum();
    Ok((
        certified > 0 && violations == 0,
        format!(
            "{certified}/{} scenes certified, {violations} violations, max measured/certified density {worst:.3}, {unmatched} mixed recovered functions",
            scenes.len()
        ),
    ))
}

fn reverse_completeness(cfg: &AcceptanceConfig) -> Verdict {
    let model = unit_disk()?;
    let constants = GeometryConstants::analytic(&model).map_err(err)?;
    let params = ReverseParams {
        density_samples: cfg.count(10_000, 1_000),
        lentils: cfg.count(2_000, 200),
        ..ReverseParams::default()
    };
    let r = reverse_check(&model, &constants, 0.8, &params, &mut cfg.rng(5)).map_err(err)?;
    Ok((
        r.status == Status::Pass,
        format!(
            "ε̂ = {:.3e}, measured density {:.3e}, ε₂ = {:.6}, certified ε = {:.3} < 0.8: {}, lentils {}/{} failed",
            r.hat_epsilon,
            r.measured_density,
            r.epsilon2,
            r.certified_epsilon,
            r.epsilon_condition,
            r.lentils_failed,
            r.lentils_tested
        ),
    ))
}

fn labeled(space: &DiscreteSpace, alpha: Option<&Vec<usize>>, grid: &BoundaryGrid) -> Result<LabeledMetricSpace, String> {
    // Without a finite proximity every node is anchored at the first point.
    let labels = alpha.cloned().unwrap_or_else(|| vec![0; grid.n]);
    LabeledMetricSpace::new(space.dist.clone(), labels).map_err(err)
}

fn one_point(grid: &BoundaryGrid) -> LabeledMetricSpace {
    LabeledMetricSpace { dist: vec![vec![0.0]], labels: vec![0; grid.n] }
}

fn lgh_bracket(cfg: &AcceptanceConfig) -> Verdict {
    let scenes = certified_scenes(cfg, 6, cfg.count(3, 1))?;
    let sample_n = cfg.count(400, 150);
    let (mut certified, mut violations) = (0, 0);
    let mut worst = f64::NEG_INFINITY;
    for (k, s) in scenes.iter().enumerate() {
        let r = &s.rec.report;
        let Bound::Finite(bound) = r.lgh_bound else { continue };
        if r.status != Status::Pass {
            continue;
        }
        certified += 1;
        let x = labeled(&s.space, s.rec.alpha.as_ref(), &s.grid)?;
        let sampled = sampled_lgh_vs_manifold(&x, &s.model, &s.grid, sample_n, &mut cfg.rng(60 + k as u64)).map_err(err)?;
        let excess = sampled.lower - sampled.slack - bound;
        worst = worst.max(excess);
        if excess > 0.0 {
            violations += 1;
        }
    }
    let two = |d: f64, labels: Vec<usize>| LabeledMetricSpace { dist: vec![vec![0.0, d], vec![d, 0.0]], labels };
    let exact = lgh_exact(&two(1.0, vec![]), &two(2.0, vec![])).map_err(err)?;
    let same = lgh_exact(&two(1.0, vec![0, 1]), &two(1.0, vec![0, 1])).map_err(err)?;
    let pinned = lgh_exact(&two(1.0, vec![0, 0]), &two(1.0, vec![0, 1])).map_err(err)?;
    let fixtures_ok = exact == 0.5 && same == 0.0 && pinned >= 0.5;
    Ok((
        certified > 0 && violations == 0 && fixtures_ok,
        format!(
            "{certified}/{} scenes certified, {violations} with sampled lower − slack > bound (max excess {worst:.3e}); fixtures {}",
            scenes.len(),
            format!("two-point d=1 vs d=2 {exact} (want 0.5), identical {same} (want 0), label-pinned {pinned} (want ≥ 0.5)")
        ),
    ))
}

fn convergence(cfg: &AcceptanceConfig) -> Verdict {
    let mut rng = cfg.rng(7);
    let model = unit_disk()?;
    let grid = BoundaryGrid::for_model(&model, cfg.grid);
    let constants = GeometryConstants::analytic(&model).map_err(err)?;
    let t_list: Vec<f64> = if cfg.quick { vec![5.0, 10.0, 20.0] } else { vec![5.0, 10.0, 20.0, 40.0, 80.0] };
    let t_max = t_list[t_list.len() - 1];
    let spec = PoissonSpec { intensity: 5.0 / model.total_volume(), t_max, density: None, margin: None };
    let sources = poisson_sources(&model, &spec, &mut rng).map_err(err)?;
    let data = forward(&model, &sources, &grid, Window::up_to(t_max), ForwardOptions::default(), &mut rng).map_err(err)?;
    let results = window_reconstruct(&data.cloud, &t_list, &constants, &WindowParams::default()).map_err(err)?;
    let sample_n = cfg.count(400, 150);
    let mut bounds = Vec::new();
    let mut lowers = Vec::new();
    for w in &results {
        let x = match &w.space {
            Some(space) => labeled(space, w.alpha.as_ref(), &grid)?,
            None => one_point(&grid),
        };
        // The same snapshot of M for every window.
        let s = sampled_lgh_vs_manifold(&x, &model, &grid, sample_n, &mut cfg.rng(70)).map_err(err)?;
        bounds.push(w.lgh_bound);
        lowers.push(s.lower);
    }
    let monotone = bounds.windows(2).all(|b| match (b[0], b[1]) {
        (_, Bound::Infinite) => b[0] == Bound::Infinite,
        (Bound::Infinite, Bound::Finite(_)) => true,
        (Bound::Finite(a), Bound::Finite(c)) => c <= 1.05 * a,
    });
    let shrink = lowers[0] >= 2.0 * lowers[lowers.len() - 1];
    let table: Vec<String> = results
        .iter()
        .zip(&lowers)
        .map(|(w, l)| format!("T={}: n={} bound={:.3} lower={l:.3}", w.t, w.complete_graphs, w.lgh_bound))
        .collect();
    Ok((
        monotone && shrink,
        format!("{} sources; bounds non-increasing: {monotone}; lower shrinks 2×: {shrink}; {}", sources.len(), table.join(", ")),
    ))
}

fn lentil_geometry(cfg: &AcceptanceConfig) -> Verdict {
    let mut rng = cfg.rng(8);
    let params = LentilCheckParams {
        lentils: cfg.count(500, 60),
        interior_points: cfg.count(200, 30),
        ..LentilCheckParams::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, model) in [("euclidean", unit_disk()?), ("hyperbolic", hyperbolic_disk()?)] {
        let constants = GeometryConstants::analytic(&model).map_err(err)?;
        let r = lentil_geometry_checks(&model, &constants, &params, &mut rng).map_err(err)?;
        pass &= r.status == Status::Pass;
        parts.push(format!(
            "{label}: {} lentils, failures diam/mid/ball/trans/cover/geod = {}/{}/{}/{}/{}/{}, max diam ratio {:.3}, min transversal ratio {:.3}",
            r.lentils,
            r.diameter_failures,
            r.midpoint_failures,
            r.ball_failures,
            r.transversal_failures,
            r.cover_failures,
            r.geodesic_failures,
            r.max_diameter_ratio,
            r.min_transversal_ratio
        ));
    }
    Ok((pass, parts.join("; ")))
}

/// `(statistic, degrees of freedom)` for observed counts against a Poisson
/// law, bins merged until every expected count is at least 5.
fn poisson_gof(counts: &[usize], mean: f64) -> Result<f64, String> {
    let pmf = PoissonPmf::new(mean).map_err(err)?;
    let total = counts.len() as f64;
    let max = *counts.iter().max().unwrap_or(&0);
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    let mut cumulative = 0.0;
    for k in 0..=max.max(1) {
        let p = pmf.pmf(k as u64);
        cumulative += p;
        obs += counts.iter().filter(|&&c| c == k).count() as f64;
        exp += total * p;
        if exp >= 5.0 && total * (1.0 - cumulative) >= 5.0 {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    // Tail: everything above the last closed bin.
    obs += counts.iter().filter(|&&c| c > max.max(1)).count() as f64;
    exp += total * (1.0 - cumulative);
    bins.push((obs, exp));
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (bins.len() - 1) as f64;
    Ok(1.0 - ChiSquared::new(df).map_err(err)?.cdf(stat))
}

/// Contingency-table independence test of two count variables.
fn independence(a: &[usize], b: &[usize]) -> Result<f64, String> {
    let bin = |v: &[usize]| -> Vec<usize> {
        let mut sorted = v.to_vec();
        sorted.sort_unstable();
        let q = |f: f64| sorted[((sorted.len() - 1) as f64 * f) as usize];
        let cuts = [q(0.25), q(0.5), q(0.75)];
        let mut cuts: Vec<usize> = cuts.to_vec();
        cuts.dedup();
        v.iter().map(|&x| cuts.iter().filter(|&&c| x > c).count()).collect()
    };
    let (ba, bb) = (bin(a), bin(b));
    let (ra, rb) = (ba.iter().max().unwrap_or(&0) + 1, bb.iter().max().unwrap_or(&0) + 1);
    let mut table = vec![vec![0.0; rb]; ra];
    for (&i, &j) in ba.iter().zip(&bb) {
        table[i][j] += 1.0;
    }
    let n = a.len() as f64;
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..rb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut stat = 0.0;
    for i in 0..ra {
        for j in 0..rb {
            let e = rows[i] * cols[j] / n;
            if e > 0.0 {
                stat += (table[i][j] - e).powi(2) / e;
            }
        }
    }
    let df = ((ra - 1) * (rb - 1)).max(1) as f64;
    Ok(1.0 - ChiSquared::new(df).map_err(err)?.cdf(stat))
}

fn poisson_statistics(cfg: &AcceptanceConfig) -> Verdict {
    let model = unit_disk()?;
    let spec = PoissonSpec { intensity: 1.0, t_max: 4.0, density: None, margin: None };
    let seeds = cfg.count(10_000, 1_000);
    let counts = crate::par::try_map_range(seeds, |k| -> Result<(usize, usize), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(9_000_000 + k as u64));
        let s = poisson_sources(&model, &spec, &mut rng).map_err(err)?;
        let a = s.iter().filter(|p| p.position.norm() < 0.5).count();
        let b = s.iter().filter(|p| (0.6..0.9).contains(&p.position.norm())).count();
        Ok((a, b))
    })?;
    let (a, b): (Vec<usize>, Vec<usize>) = counts.into_iter().unzip();
    let mean_a = spec.intensity * spec.t_max * std::f64::consts::PI * 0.25;
    let mean_b = spec.intensity * spec.t_max * std::f64::consts::PI * (0.81 - 0.36);
    let (pa, pb) = (poisson_gof(&a, mean_a)?, poisson_gof(&b, mean_b)?);
    let pi = independence(&a, &b)?;
    Ok((
        pa > 0.01 && pb > 0.01 && pi > 0.01,
        format!("{seeds} seeds; goodness of fit p = {pa:.3} (inner disk), {pb:.3} (annulus); independence p = {pi:.3}"),
    ))
}

fn equivariance(cfg: &AcceptanceConfig) -> Verdict {
    let mut rng = cfg.rng(10);
    let model = unit_disk()?;
    let grid = BoundaryGrid::for_model(&model, cfg.grid);
    let constants = GeometryConstants::analytic(&model).map_err(err)?;
    let (data, _) = poisson_scene(&model, &grid, cfg.count(120, 60) as f64, 1.0, &mut rng)?;
    let k = rng.random_range(1..grid.n);
    let rotated = data.cloud.rotated(k);
    let (fa, sa) = recover(&data.cloud, &grid)?;
    let (fb, sb) = recover(&rotated, &grid)?;
    let params = ReconstructParams::default();
    let ra = sweep_epsilon1(&sa, &constants, &params).map_err(err)?;
    let rb = sweep_epsilon1(&sb, &constants, &params).map_err(err)?;
    let n = grid.n;
    let functions_ok = fa.len() == fb.len() && fa.iter().zip(&fb).all(|(a, b)| (0..n).all(|i| a.values[i].to_bits() == b.values[(i + k) % n].to_bits()));
    let dist_ok = sa.dist == sb.dist && sa.time_diffs == sb.time_diffs;
    let (ea, eb) = (&ra.proximity.estimate, &rb.proximity.estimate);
    let e_ok = ea.e == eb.e && (0..n).all(|i| ea.node_e[i] == eb.node_e[(i + k) % n]);
    let report_ok = ra.report.gamma_indices == rb.report.gamma_indices
        && ra.report.certificates == rb.report.certificates
        && ra.report.status == rb.report.status
        && ra.report.epsilon1 == rb.report.epsilon1;
    Ok((
        functions_ok && dist_ok && e_ok && report_ok,
        format!(
            "rotation by {k} nodes, {} points: functions {functions_ok}, distances {dist_ok}, E {e_ok}, Γ/certificates/status {report_ok} (status {})",
            sa.len(),
            ra.report.status
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gof_accepts_poisson_and_rejects_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = rand_distr::Poisson::new(3.0).unwrap();
        let draws: Vec<usize> = (0..5000).map(|_| rand_distr::Distribution::<f64>::sample(&d, &mut rng) as usize).collect();
        assert!(poisson_gof(&draws, 3.0).unwrap() > 0.001);
        assert!(poisson_gof(&vec![3; 5000], 3.0).unwrap() < 1e-6);
    }

    #[test]
    fn independence_detects_dependence() {
        let a: Vec<usize> = (0..4000).map(|k| k % 7).collect();
        assert!(independence(&a, &a).unwrap() < 1e-6);
        let b: Vec<usize> = (0..4000).map(|k| (k / 7) % 5).collect();
        assert!(independence(&a, &b).unwrap() > 0.01);
    }
}
