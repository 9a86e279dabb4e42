//! Distances and emission-time differences between recovered sources.
//!
//! For two arrival functions the difference `h = a_r − a_s` equals
//! `d(p_r,·) − d(p_s,·)` up to a constant. Its extremes sit at the two
//! boundary endpoints of the geodesic through both sources, where the
//! differentials of `a_r` and `a_s` agree, and its oscillation is twice the
//! distance between the sources.

use serde::{Deserialize, Serialize};

use crate::disentangle::ArrivalFunction;
use crate::geometry::{BoundaryGrid, BoundaryLocation};
use crate::par;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservablesError {
    #[error("functions {r} and {s}: {reason}")]
    Pair { r: usize, s: usize, reason: String },
    #[error("function {tag} has {got} values, expected {expected}")]
    Length { tag: usize, got: usize, expected: usize },
    #[error("assembled space violates {0}")]
    Invariant(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    /// Minimum of `a_r − a_s`: the far end on the `p_r` side.
    pub x: BoundaryLocation,
    /// Maximum of `a_r − a_s`: the far end on the `p_s` side.
    pub y: BoundaryLocation,
    pub h_min: f64,
    pub h_max: f64,
    /// Reciprocal of the smaller curvature of `a_r − a_s` at the endpoints;
    /// large for nearly coincident sources.
    pub condition: f64,
}

/// Parabolic vertex through three equally spaced samples.
fn vertex(left: f64, c: f64, right: f64) -> (f64, f64) {
    let denom = left - 2.0 * c + right;
    if denom == 0.0 {
        return (0.0, c);
    }
    let off = (0.5 * (left - right) / denom).clamp(-0.5, 0.5);
    (off, c - 0.25 * (left - right) * off)
}

fn difference(a_r: &[f64], a_s: &[f64]) -> Vec<f64> {
    a_r.iter().zip(a_s).map(|(x, y)| x - y).collect()
}

/// The two boundary locations where `a_r′ = a_s′`.
pub fn conjoined_endpoints(grid: &BoundaryGrid, a_r: &[f64], a_s: &[f64]) -> Result<Endpoints, String> {
    let n = grid.n;
    let h = difference(a_r, a_s);
    let mut imin = 0;
    let mut imax = 0;
    for i in 1..n {
        if h[i] < h[imin] {
            imin = i;
        }
        if h[i] > h[imax] {
            imax = i;
        }
    }
    let scale = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if h[imax] - h[imin] <= 1e-12 * scale {
        return Err("difference of arrival functions is constant (same spatial point)".into());
    }
    let at = |i: usize, k: isize| h[grid.wrap(i as isize + k)];
    let (ox, vx) = vertex(at(imin, -1), h[imin], at(imin, 1));
    let (oy, vy) = vertex(at(imax, -1), h[imax], at(imax, 1));
    let x = BoundaryLocation { node: imin, offset: ox };
    let y = BoundaryLocation { node: imax, offset: oy };
    if grid.arc_distance(x, y) < 2.0 * grid.spacing() {
        return Err("extremes of the difference are not separated".into());
    }
    let sp2 = grid.spacing() * grid.spacing();
    let cx = (at(imin, -1) - 2.0 * h[imin] + at(imin, 1)) / sp2;
    let cy = (at(imax, -1) - 2.0 * h[imax] + at(imax, 1)) / sp2;
    Ok(Endpoints {
        x,
        y,
        h_min: vx,
        h_max: vy,
        condition: 1.0 / cx.abs().min(cy.abs()),
    })
}

/// `½·|f_rr(x,y) − f_ss(x,y)|`.
pub fn pairwise_distance(e: &Endpoints) -> f64 {
    0.5 * (e.h_max - e.h_min)
}

/// `f^{rs}(z) = d(p_r,z) − d(p_s,z)` at every node, with the orientation
/// that fits `|f^{rs}| ≤ d(p_r,p_s)` best.
pub fn distance_difference_function(
    a_r: &[f64],
    a_s: &[f64],
    e: &Endpoints,
    obs_tol: f64,
) -> Result<Vec<f64>, String> {
    let d = pairwise_distance(e);
    let h = difference(a_r, a_s);
    // Anchored at y: f(y) = +d. Anchored at x: f(x) = −d.
    let from_y: Vec<f64> = h.iter().map(|v| v - e.h_max + d).collect();
    let from_x: Vec<f64> = h.iter().map(|v| v - e.h_min - d).collect();
    let residual = |f: &[f64]| f.iter().fold(0.0f64, |m, v| m.max(v.abs() - d));
    let (ry, rx) = (residual(&from_y), residual(&from_x));
    if ry.min(rx) > obs_tol {
        return Err(format!("orientation inconclusive (residuals {ry:.3e}, {rx:.3e})"));
    }
    Ok(if ry <= rx { from_y } else { from_x })
}

/// `τ_r − τ_s` as the median of `a_r − a_s − f^{rs}` over nodes, with its spread.
pub fn time_difference(a_r: &[f64], a_s: &[f64], f_rs: &[f64]) -> (f64, f64) {
    let mut v: Vec<f64> = a_r.iter().zip(a_s).zip(f_rs).map(|((x, y), f)| x - y - f).collect();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    let median = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
    (median, v[m - 1] - v[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairObservation {
    pub r: usize,
    pub s: usize,
    pub endpoints: Endpoints,
    pub distance: f64,
    pub time_diff: f64,
    pub spread: f64,
}

/// Recovered discrete space `(P, d)` with time differences.
///
/// Distance-difference functions are not stored; `dd_function` rebuilds
/// any of them from the retained arrival functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpace {
    pub grid: BoundaryGrid,
    pub points: Vec<usize>,
    pub dist: Vec<Vec<f64>>,
    pub time_diffs: Vec<Vec<f64>>,
    pub endpoint_pairs: Vec<PairObservation>,
    pub obs_tol: f64,
    pub functions: Vec<ArrivalFunction>,
}

impl DiscreteSpace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn pair(&self, r: usize, s: usize) -> Option<&PairObservation> {
        let (a, b) = (r.min(s), r.max(s));
        let n = self.len();
        // Pairs are stored in row-major order of the strict upper triangle.
        let k = a * n - a * (a + 1) / 2 + (b - a - 1);
        self.endpoint_pairs.get(k)
    }

    /// `f^{rs}` on the grid; the zero function when `r = s`.
    pub fn dd_function(&self, r: usize, s: usize) -> Vec<f64> {
        if r == s {
            return vec![0.0; self.grid.n];
        }
        let p = self.pair(r, s).expect("pair index in range");
        let f = distance_difference_function(&self.functions[p.r].values, &self.functions[p.s].values, &p.endpoints, f64::INFINITY)
            .expect("orientation accepted at assembly");
        if r == p.r {
            f
        } else {
            f.into_iter().map(|v| -v).collect()
        }
    }
}

pub fn default_obs_tol(grid: &BoundaryGrid) -> f64 {
    2.0 * grid.spacing()
}

fn observe(grid: &BoundaryGrid, fr: &ArrivalFunction, fs: &ArrivalFunction, r: usize, s: usize, obs_tol: f64) -> Result<PairObservation, ObservablesError> {
    let err = |reason: String| ObservablesError::Pair { r: fr.tag, s: fs.tag, reason };
    let e = conjoined_endpoints(grid, &fr.values, &fs.values).map_err(err)?;
    let f = distance_difference_function(&fr.values, &fs.values, &e, obs_tol).map_err(err)?;
    let (time_diff, spread) = time_difference(&fr.values, &fs.values, &f);
    if spread > 10.0 * obs_tol {
        return Err(err(format!("time difference spread {spread:.3e} exceeds 10·obs_tol")));
    }
    Ok(PairObservation {
        r,
        s,
        endpoints: e,
        distance: pairwise_distance(&e),
        time_diff,
        spread,
    })
}

/// All pairwise observables of deduplicated arrival functions.
pub fn assemble(grid: &BoundaryGrid, functions: &[ArrivalFunction], obs_tol: f64) -> Result<DiscreteSpace, ObservablesError> {
    for f in functions {
        if f.values.len() != grid.n {
            return Err(ObservablesError::Length {
                tag: f.tag,
                got: f.values.len(),
                expected: grid.n,
            });
        }
    }
    let n = functions.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|r| ((r + 1)..n).map(move |s| (r, s))).collect();
    let obs = par::try_map_range(pairs.len(), |k| {
        let (r, s) = pairs[k];
        observe(grid, &functions[r], &functions[s], r, s, obs_tol)
    })?;
    let mut dist = vec![vec![0.0; n]; n];
    let mut time_diffs = vec![vec![0.0; n]; n];
    for o in &obs {
        dist[o.r][o.s] = o.distance;
        dist[o.s][o.r] = o.distance;
        time_diffs[o.r][o.s] = o.time_diff;
        time_diffs[o.s][o.r] = -o.time_diff;
    }
    let space = DiscreteSpace {
        grid: *grid,
        points: functions.iter().map(|f| f.tag).collect(),
        dist,
        time_diffs,
        endpoint_pairs: obs,
        obs_tol,
        functions: functions.to_vec(),
    };
    check_invariants(&space)?;
    Ok(space)
}

fn check_invariants(space: &DiscreteSpace) -> Result<(), ObservablesError> {
    let n = space.len();
    let (d, t, tol) = (&space.dist, &space.time_diffs, space.obs_tol);
    let bad = par::map_range(n, |i| {
        for j in 0..n {
            for k in 0..n {
                if d[i][k] > d[i][j] + d[j][k] + 3.0 * tol {
                    return Some(format!("triangle inequality at ({i},{j},{k})"));
                }
                if (t[i][j] + t[j][k] - t[i][k]).abs() > tol {
                    return Some(format!("time-difference additivity at ({i},{j},{k})"));
                }
            }
        }
        None
    });
    match bad.into_iter().flatten().next() {
        Some(msg) => Err(ObservablesError::Invariant(msg)),
        None => Ok(()),
    }
}

/// Rows `r,s,node,value` of every `f^{rs}` with `r < s`.
pub fn dd_rows(space: &DiscreteSpace) -> Vec<(usize, usize, usize, f64)> {
    let mut rows = Vec::new();
    for p in &space.endpoint_pairs {
        for (node, v) in space.dd_function(p.r, p.s).into_iter().enumerate() {
            rows.push((space.points[p.r], space.points[p.s], node, v));
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_distance_function, ManifoldModel, Vec2};
    use std::f64::consts::PI;

    fn arrivals(m: &ManifoldModel, g: &BoundaryGrid, p: Vec2, tau: f64, tag: usize) -> ArrivalFunction {
        let r = boundary_distance_function(m, p, g).unwrap();
        ArrivalFunction { tag, values: r.into_iter().map(|d| d + tau).collect() }
    }

    #[test]
    fn collinear_pair_on_unit_disk() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 1024);
        let a = arrivals(&m, &g, Vec2::new(0.5, 0.0), 2.0, 0);
        let b = arrivals(&m, &g, Vec2::new(-0.5, 0.0), 5.0, 1);
        let e = conjoined_endpoints(&g, &a.values, &b.values).unwrap();
        let mut ends = [e.x.param(&g), e.y.param(&g)];
        ends.sort_by(f64::total_cmp);
        assert!(ends[0].abs() < 1e-9 && (ends[1] - PI).abs() < 1e-9);
        assert!((pairwise_distance(&e) - 1.0).abs() < 1e-12);
        let f = distance_difference_function(&a.values, &b.values, &e, 0.01).unwrap();
        let (dt, spread) = time_difference(&a.values, &b.values, &f);
        assert!((dt + 3.0).abs() < 1e-12 && spread < 1e-12);
        // f^{rs}(x) = −d at the endpoint beyond p_r.
        assert!((f[e.x.node] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn oblique_pair_matches_straight_line() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 1024);
        let (p, q) = (Vec2::new(0.5, 0.0), Vec2::new(0.0, 0.5));
        let a = arrivals(&m, &g, p, 0.0, 0);
        let b = arrivals(&m, &g, q, 0.0, 1);
        let e = conjoined_endpoints(&g, &a.values, &b.values).unwrap();
        assert!((pairwise_distance(&e) - 0.5f64.sqrt()).abs() < default_obs_tol(&g));
        // Endpoints lie on the line through p and q.
        for loc in [e.x, e.y] {
            let z = m.boundary_point(loc.param(&g));
            assert!((z - p).cross(q - p).abs() < 1e-4);
        }
        let f = distance_difference_function(&a.values, &b.values, &e, default_obs_tol(&g)).unwrap();
        for (i, z) in g.positions(&m).into_iter().enumerate() {
            assert!((f[i] - (z.distance(p) - z.distance(q))).abs() < default_obs_tol(&g));
        }
    }

    #[test]
    fn identical_points_are_rejected() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 256);
        let a = arrivals(&m, &g, Vec2::new(0.2, 0.1), 0.0, 0);
        let b = arrivals(&m, &g, Vec2::new(0.2, 0.1), 4.0, 1);
        assert!(conjoined_endpoints(&g, &a.values, &b.values).is_err());
        assert!(matches!(assemble(&g, &[a, b], 0.1), Err(ObservablesError::Pair { .. })));
    }

    #[test]
    fn assembled_space_properties() {
        let m = ManifoldModel::curved_disk(-1.0, 0.6).unwrap();
        let g = BoundaryGrid::for_model(&m, 1024);
        let pts = [Vec2::new(0.1, 0.2), Vec2::new(-0.3, 0.1), Vec2::new(0.2, -0.35), Vec2::new(0.0, 0.0)];
        let taus = [0.0, 1.0, 2.5, -0.5];
        let fs: Vec<ArrivalFunction> = pts.iter().zip(taus).enumerate().map(|(k, (p, t))| arrivals(&m, &g, *p, t, k)).collect();
        let space = assemble(&g, &fs, default_obs_tol(&g)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let truth = m.distance(pts[i], pts[j]).unwrap();
                assert!((space.dist[i][j] - truth).abs() <= 2.0 * g.spacing() + 3.0 * m.tol_dist());
                assert!((space.time_diffs[i][j] - (taus[i] - taus[j])).abs() <= space.obs_tol);
            }
        }
        // Cocycle property and antisymmetry of the dd functions.
        let (f01, f12, f02, f10) = (space.dd_function(0, 1), space.dd_function(1, 2), space.dd_function(0, 2), space.dd_function(1, 0));
        for k in 0..g.n {
            assert!((f01[k] + f12[k] - f02[k]).abs() <= 3.0 * space.obs_tol);
            assert_eq!(f01[k], -f10[k]);
        }
        assert_eq!(dd_rows(&space).len(), 6 * g.n);
    }

    #[test]
    fn single_source_space_is_trivial() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 64);
        let space = assemble(&g, &[arrivals(&m, &g, Vec2::new(0.1, 0.1), 0.0, 7)], 0.1).unwrap();
        assert_eq!(space.dist, vec![vec![0.0]]);
        assert_eq!(space.points, vec![7]);
        assert!(space.dd_function(0, 0).iter().all(|v| *v == 0.0));
    }
}
