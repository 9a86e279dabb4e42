//! Ground-truth check that a sufficiently dense source set is certified.
//!
//! The lattice needed here has spacing of order `ε̂`, far too many points to
//! push through the data pipeline, so the data-side quantities are evaluated
//! from the known geometry: `E(p,y)` from the exact boundary Hessian of `r_p`
//! and lentil witnesses from the lattice point nearest to the lentil midpoint.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{proximity_from_hessian, Bound, Status};
use crate::constants::GeometryConstants;
use crate::geometry::{GeometryError, ManifoldModel, Vec2};
use crate::par;
use crate::scene::TriangularLattice;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseParams {
    pub density_samples: usize,
    pub boundary_samples: usize,
    pub lentils: usize,
    /// Lattice spacing as a multiple of `ε̂`.
    pub spacing_factor: f64,
    /// Distance of the outer lattice ring from `∂M` as a multiple of `ε̂`.
    pub margin_factor: f64,
}

impl Default for ReverseParams {
    fn default() -> Self {
        ReverseParams {
            density_samples: 10_000,
            boundary_samples: 1_000,
            lentils: 2_000,
            spacing_factor: 1.0,
            margin_factor: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseReport {
    pub epsilon: f64,
    pub hat_epsilon: f64,
    pub lattice_spacing: f64,
    pub measured_density: f64,
    pub applicable: bool,
    pub epsilon1: f64,
    #[serde(rename = "E")]
    pub e: Bound,
    pub epsilon2: Bound,
    pub delta: Bound,
    /// `C₁₂ ε₂ + C₁₁ √ε₂`, required to be below `epsilon`.
    pub certified_epsilon: Bound,
    pub epsilon_condition: Status,
    pub gamma_size: usize,
    pub lentils_tested: usize,
    pub lentils_failed: usize,
    pub status: Status,
}

fn nearest(model: &ManifoldModel, lattice: &TriangularLattice, p: Vec2) -> Result<(f64, Vec2), GeometryError> {
    let mut best = (f64::INFINITY, p);
    for q in lattice.candidates_near(p, 2) {
        let d = model.distance(p, q)?;
        if d < best.0 {
            best = (d, q);
        }
    }
    Ok(best)
}

/// Largest distance from sampled points of `M` (interior and boundary) to the lattice.
pub fn measured_density<R: Rng>(
    model: &ManifoldModel,
    lattice: &TriangularLattice,
    interior: usize,
    boundary: usize,
    rng: &mut R,
) -> Result<f64, GeometryError> {
    let r = model.radius();
    let mut points: Vec<Vec2> = (0..interior)
        .map(|_| Vec2::from_polar(r * rng.random::<f64>().sqrt(), rng.random::<f64>() * std::f64::consts::TAU))
        .collect();
    let len = model.boundary_length();
    points.extend((0..boundary).map(|_| model.boundary_point(len * rng.random::<f64>())));
    let d = par::try_map_slice(&points, |p| nearest(model, lattice, *p).map(|b| b.0))?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

struct NearBoundary {
    point: Vec2,
    foot_param: f64,
    e: f64,
}

/// Exact boundary Hessian of `r_p` at its nearest boundary point.
fn boundary_hessian_exact(model: &ManifoldModel, p: Vec2, foot_param: f64, depth: f64) -> Result<f64, GeometryError> {
    let f = |u: f64| model.distance(p, model.boundary_point(foot_param + u));
    let f0 = f(0.0)?;
    let second = |h: f64| -> Result<f64, GeometryError> { Ok((f(h)? - 2.0 * f0 + f(-h)?) / (h * h)) };
    // Richardson extrapolation of two central differences.
    let h = 0.05 * depth;
    Ok((4.0 * second(0.5 * h)? - second(h)?) / 3.0)
}

fn near_boundary_points(
    model: &ManifoldModel,
    lattice: &TriangularLattice,
    constants: &GeometryConstants,
    max_depth: f64,
) -> Result<Vec<NearBoundary>, GeometryError> {
    let len = model.boundary_length();
    let count = (2.0 * len / lattice.spacing).ceil() as usize;
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    for k in 0..count {
        let b = model.boundary_point(len * k as f64 / count as f64);
        for q in lattice.candidates_near(b, 3) {
            if seen.insert((q.x.to_bits(), q.y.to_bits())) {
                candidates.push(q);
            }
        }
    }
    let out = par::try_map_slice(&candidates, |&p| -> Result<Option<NearBoundary>, GeometryError> {
        let (depth, foot) = model.distance_to_boundary(p)?;
        if depth > max_depth || depth <= 0.0 {
            return Ok(None);
        }
        let foot_param = model.boundary_arclength(foot.angle());
        let lambda = boundary_hessian_exact(model, p, foot_param, depth)?;
        Ok(match proximity_from_hessian(lambda, constants) {
            Bound::Finite(e) => Some(NearBoundary { point: p, foot_param, e }),
            Bound::Infinite => None,
        })
    })?;
    let mut out: Vec<NearBoundary> = out.into_iter().flatten().collect();
    out.sort_by(|a, b| a.foot_param.total_cmp(&b.foot_param));
    Ok(out)
}

/// `E = max_x min_p (E(p,y_p) + d_∂M(x,y_p))` over a boundary grid finer than
/// the lattice, plus half the grid step.
fn global_proximity(model: &ManifoldModel, near: &[NearBoundary], step: f64) -> f64 {
    let len = model.boundary_length();
    let n = (len / step).ceil() as usize;
    let h = len / n as f64;
    let params: Vec<f64> = near.iter().map(|p| p.foot_param).collect();
    let window = 8.0 * step;
    let per_node = par::map_range(n, |i| {
        let x = i as f64 * h;
        let arc = |s: f64| {
            let d = (x - s).rem_euclid(len);
            d.min(len - d)
        };
        let mut best = f64::INFINITY;
        let mut scan = |lo: f64, hi: f64| {
            let a = params.partition_point(|&s| s < lo);
            let b = params.partition_point(|&s| s <= hi);
            for p in &near[a..b] {
                best = best.min(p.e + arc(p.foot_param));
            }
        };
        scan(x - window, x + window);
        if x - window < 0.0 {
            scan(x - window + len, len);
        }
        if x + window > len {
            scan(0.0, x + window - len);
        }
        if best.is_finite() {
            best
        } else {
            near.iter().map(|p| p.e + arc(p.foot_param)).fold(f64::INFINITY, f64::min)
        }
    });
    per_node.into_iter().fold(0.0, f64::max) + 0.5 * h
}

fn lattice_point<R: Rng>(model: &ManifoldModel, lattice: &TriangularLattice, rng: &mut R) -> Result<Vec2, GeometryError> {
    let r = model.radius();
    let p = Vec2::from_polar(r * rng.random::<f64>().sqrt(), rng.random::<f64>() * std::f64::consts::TAU);
    Ok(nearest(model, lattice, p)?.1)
}

pub fn reverse_check<R: Rng>(
    model: &ManifoldModel,
    constants: &GeometryConstants,
    epsilon: f64,
    params: &ReverseParams,
    rng: &mut R,
) -> Result<ReverseReport, GeometryError> {
    let hat = constants.hat_epsilon(epsilon);
    let spacing = params.spacing_factor * hat;
    let lattice = TriangularLattice::new(model, spacing, params.margin_factor * hat)
        .map_err(|e| GeometryError::Degenerate(e.to_string()))?;
    let density = measured_density(model, &lattice, params.density_samples, params.boundary_samples, rng)?;
    let applicable = density <= hat;

    let eps1 = constants.c19 * hat;
    let near = near_boundary_points(model, &lattice, constants, 3.0 * spacing)?;
    let e = if near.is_empty() {
        Bound::Infinite
    } else {
        Bound::Finite(global_proximity(model, &near, 0.25 * hat))
    };
    let epsilon2 = e.map(|e| eps1 + e);
    let delta = epsilon2.map(|e2| constants.c9 * e2);
    let certified_epsilon = epsilon2.map(|e2| constants.lgh_epsilon(e2));
    let epsilon_condition = if certified_epsilon.value() < epsilon { Status::Pass } else { Status::Fail };
    let gamma: Vec<Vec2> = near.iter().filter(|p| p.e < eps1).map(|p| p.point).collect();

    let mut tested = 0;
    let mut failed = 0;
    if let Bound::Finite(delta) = delta {
        let mut pairs = Vec::with_capacity(params.lentils);
        for k in 0..params.lentils {
            let (x, y) = if k % 2 == 0 && gamma.len() >= 2 {
                let i = rng.random_range(0..gamma.len());
                let j = rng.random_range(0..gamma.len());
                (gamma[i], gamma[j])
            } else {
                (lattice_point(model, &lattice, rng)?, lattice_point(model, &lattice, rng)?)
            };
            pairs.push((x, y, rng.random::<f64>()));
        }
        let results = par::try_map_slice(&pairs, |&(x, y, u)| -> Result<Option<bool>, GeometryError> {
            let d = model.distance(x, y)?;
            if d <= delta {
                return Ok(None);
            }
            let r = delta + (d - delta) * u;
            if r <= delta || r >= d {
                return Ok(None);
            }
            let s = d - r + delta;
            let m = model.geodesic_point(x, y, (r - 0.5 * delta) / d)?;
            let (_, w) = nearest(model, &lattice, m)?;
            Ok(Some(model.distance(w, x)? < r && model.distance(w, y)? < s))
        })?;
        for r in results.into_iter().flatten() {
            tested += 1;
            failed += (!r) as usize;
        }
    }

    let status = if !applicable {
        Status::NotApplicable
    } else if epsilon_condition == Status::Pass && failed == 0 {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(ReverseReport {
        epsilon,
        hat_epsilon: hat,
        lattice_spacing: spacing,
        measured_density: density,
        applicable,
        epsilon1: eps1,
        e,
        epsilon2,
        delta,
        certified_epsilon,
        epsilon_condition,
        gamma_size: gamma.len(),
        lentils_tested: tested,
        lentils_failed: failed,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn exact_hessian_matches_closed_form() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let lambda = boundary_hessian_exact(&m, Vec2::new(0.9, 0.0), 0.0, 0.1).unwrap();
        assert!((lambda - 9.0).abs() < 1e-4);
    }

    #[test]
    fn sparse_lattice_is_not_applicable() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let c = GeometryConstants::analytic(&m).unwrap();
        let params = ReverseParams { spacing_factor: 2000.0, density_samples: 500, boundary_samples: 100, lentils: 10, ..Default::default() };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let r = reverse_check(&m, &c, 0.8, &params, &mut rng).unwrap();
        assert!(!r.applicable);
        assert_eq!(r.status, Status::NotApplicable);
    }

    #[test]
    fn huge_epsilon_uses_first_branch() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let c = GeometryConstants::analytic(&m).unwrap();
        assert_eq!(c.hat_epsilon(1e9), c.c25);
    }
}
