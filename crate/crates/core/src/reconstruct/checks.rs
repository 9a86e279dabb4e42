//! Monte-Carlo checks of the lentil bounds on a known model.
//!
//! Lentils are evaluated in the complete constant-curvature surface that
//! contains the disk (the disk itself for conformal models), so a lentil
//! near the rim is not clipped by `∂M`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constants::GeometryConstants;
use crate::geometry::{GeometryError, ManifoldModel, Vec2};
use crate::reconstruct::Status;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LentilCheckParams {
    pub lentils: usize,
    pub interior_points: usize,
    /// Accepted interior samples per lentil for the diameter estimate.
    pub diameter_samples: usize,
    /// `ε₁` of the synthetic boundary set used by the covering check,
    /// as a fraction of `C_diam`.
    pub cover_eps1_fraction: f64,
}

impl Default for LentilCheckParams {
    fn default() -> Self {
        LentilCheckParams {
            lentils: 500,
            interior_points: 200,
            diameter_samples: 128,
            cover_eps1_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LentilCheckReport {
    pub lentils: usize,
    pub diameter_failures: usize,
    /// Largest sampled `diam / (δ + C_e √δ)`.
    pub max_diameter_ratio: f64,
    pub midpoint_failures: usize,
    pub ball_failures: usize,
    pub transversal_failures: usize,
    /// Smallest `R / min(C_h √(δ min(r,s)), ½ C_diam)`.
    pub min_transversal_ratio: f64,
    pub cover_points: usize,
    pub cover_failures: usize,
    pub geodesic_failures: usize,
    pub status: Status,
}

/// `L^{x,y}_{r,s}` in the ambient surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lentil {
    pub x: Vec2,
    pub y: Vec2,
    pub r: f64,
    pub s: f64,
}

impl Lentil {
    pub fn thickness(&self, model: &ManifoldModel) -> Result<f64, GeometryError> {
        Ok(self.r + self.s - model.ambient_distance(self.x, self.y)?)
    }

    pub fn contains(&self, model: &ManifoldModel, z: Vec2) -> bool {
        match (model.ambient_distance(z, self.x), model.ambient_distance(z, self.y)) {
            (Ok(a), Ok(b)) => a < self.r && b < self.s,
            _ => false,
        }
    }

    fn contains_closed(&self, model: &ManifoldModel, z: Vec2) -> bool {
        let slack = 1e-12 * (1.0 + self.r + self.s);
        match (model.ambient_distance(z, self.x), model.ambient_distance(z, self.y)) {
            (Ok(a), Ok(b)) => a <= self.r + slack && b <= self.s + slack,
            _ => false,
        }
    }

    /// `γ_{x,y}(r − δ/2)`.
    pub fn midpoint(&self, model: &ManifoldModel) -> Result<Vec2, GeometryError> {
        let delta = self.thickness(model)?;
        along(model, self.x, self.y, self.r - 0.5 * delta)
    }
}

/// Coordinate vector at `p` of metric length `len` in direction `dir`.
fn tangent(model: &ManifoldModel, p: Vec2, dir: Vec2, len: f64) -> Vec2 {
    dir.normalized() * (len * model.conformal(p))
}

/// Point at metric distance `t` from `p` along the geodesic towards `q`.
fn along(model: &ManifoldModel, p: Vec2, q: Vec2, t: f64) -> Result<Vec2, GeometryError> {
    let v = model.ambient_log(p, q)?;
    model.ambient_exp(p, tangent(model, p, v, t))
}

fn random_point<R: Rng>(model: &ManifoldModel, rng: &mut R, fraction: f64) -> Vec2 {
    let rho = model.radius() * fraction * rng.random::<f64>().sqrt();
    Vec2::from_polar(rho, rng.random::<f64>() * std::f64::consts::TAU)
}

/// Sampled diameter of a lentil: polar scan around `x` to find its angular
/// extent, then uniform samples inside that sector.
pub fn sampled_diameter<R: Rng>(model: &ManifoldModel, lentil: &Lentil, samples: usize, rng: &mut R) -> Result<f64, GeometryError> {
    let delta = lentil.thickness(model)?;
    let theta0 = model.ambient_log(lentil.x, lentil.y)?.angle();
    let (rho_lo, rho_hi) = (lentil.r - delta, lentil.r);
    let point = |phi: f64, rho: f64| model.ambient_exp(lentil.x, tangent(model, lentil.x, Vec2::from_polar(1.0, phi), rho));
    let mut inside = Vec::new();
    let scan = 2048;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..scan {
        let phi = theta0 - std::f64::consts::PI + std::f64::consts::TAU * (k as f64 + 0.5) / scan as f64;
        for j in 0..8 {
            let rho = rho_lo + (rho_hi - rho_lo) * (j as f64 + 0.5) / 8.0;
            if let Ok(z) = point(phi, rho) {
                if lentil.contains(model, z) {
                    inside.push(z);
                    lo = lo.min(phi);
                    hi = hi.max(phi);
                }
            }
        }
    }
    if !lo.is_finite() {
        // Thinner than the scan: sample the immediate neighbourhood of the axis.
        let w = std::f64::consts::TAU / scan as f64;
        lo = theta0 - w;
        hi = theta0 + w;
    }
    let pad = std::f64::consts::TAU / scan as f64;
    let (lo, hi) = (lo - pad, hi + pad);
    let mut attempts = 0;
    let mut accepted = 0;
    while accepted < samples && attempts < 50 * samples {
        attempts += 1;
        let phi = lo + (hi - lo) * rng.random::<f64>();
        let rho = rho_lo + (rho_hi - rho_lo) * rng.random::<f64>();
        if let Ok(z) = point(phi, rho) {
            if lentil.contains(model, z) {
                inside.push(z);
                accepted += 1;
            }
        }
    }
    let mut diam = 0.0f64;
    for i in 0..inside.len() {
        for j in (i + 1)..inside.len() {
            diam = diam.max(model.ambient_distance(inside[i], inside[j])?);
        }
    }
    Ok(diam)
}

/// Transversal radius at the midpoint by bisection along both normal directions.
pub fn transversal_radius(model: &ManifoldModel, lentil: &Lentil, upper: f64) -> Result<f64, GeometryError> {
    let m = lentil.midpoint(model)?;
    let axis = model.ambient_log(m, lentil.y)?;
    let normal = axis.perp();
    let mut radius = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let at = |t: f64| model.ambient_exp(m, tangent(model, m, normal * sign, t)).map(|z| lentil.contains_closed(model, z)).unwrap_or(false);
        let (mut lo, mut hi) = (0.0, upper);
        if at(hi) {
            radius = radius.min(hi);
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if at(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        radius = radius.min(lo);
    }
    Ok(radius)
}

/// Distance from `z` to the geodesic segment `[x, y]` and the nearest point.
fn project_to_geodesic(model: &ManifoldModel, x: Vec2, y: Vec2, z: Vec2) -> Result<(f64, Vec2), GeometryError> {
    let d = |t: f64| -> Result<(f64, Vec2), GeometryError> {
        let p = model.geodesic_point(x, y, t)?;
        Ok((model.distance(z, p)?, p))
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, 1.0);
    let mut t1 = b - g * (b - a);
    let mut t2 = a + g * (b - a);
    let (mut f1, mut f2) = (d(t1)?.0, d(t2)?.0);
    for _ in 0..80 {
        if f1 < f2 {
            b = t2;
            t2 = t1;
            f2 = f1;
            t1 = b - g * (b - a);
            f1 = d(t1)?.0;
        } else {
            a = t1;
            t1 = t2;
            f1 = f2;
            t2 = a + g * (b - a);
            f2 = d(t2)?.0;
        }
    }
    d(0.5 * (a + b))
}

/// Synthetic `Γ`: points at depth `ε₁/2` below boundary points spaced `ε₁/2`
/// apart in arclength.
fn synthetic_gamma(model: &ManifoldModel, eps1: f64) -> Result<Vec<Vec2>, GeometryError> {
    let count = (2.0 * model.boundary_length() / eps1).ceil() as usize;
    (0..count)
        .map(|k| {
            let b = model.boundary_point(model.boundary_length() * k as f64 / count as f64);
            let inward = b * -1.0;
            model.exp_map(b, tangent(model, b, inward, 0.5 * eps1))
        })
        .collect()
}

struct CoverOutcome {
    geodesic_ok: bool,
    covered: bool,
}

fn cover_point(
    model: &ManifoldModel,
    constants: &GeometryConstants,
    gamma: &[Vec2],
    z: Vec2,
    eps2: f64,
) -> Result<CoverOutcome, GeometryError> {
    let delta = constants.c9 * eps2;
    let n = gamma.len();
    // Candidate x: every fourth Γ point; y: the Γ points nearest to the
    // exit of the ray from x through z.
    let mut best: Option<(f64, usize, usize, Vec2)> = None;
    for i in (0..n).step_by(4) {
        let x = gamma[i];
        let dir = model.log_map(x, z)?;
        let (mut lo, mut hi) = (0.0, 4.0 * constants.fundamental.c_diam);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if model.exp_map(x, tangent(model, x, dir, mid)).is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let exit = model.exp_map(x, tangent(model, x, dir, lo))?;
        let k0 = ((exit.angle().rem_euclid(std::f64::consts::TAU)) / std::f64::consts::TAU * n as f64).round() as isize;
        for dk in -2..=2 {
            let j = (k0 + dk).rem_euclid(n as isize) as usize;
            if j == i {
                continue;
            }
            let (dist, zp) = project_to_geodesic(model, x, gamma[j], z)?;
            if best.as_ref().is_none_or(|b| dist < b.0) {
                best = Some((dist, i, j, zp));
            }
        }
    }
    let Some((dist, i, j, zp)) = best else {
        return Ok(CoverOutcome { geodesic_ok: false, covered: false });
    };
    let geodesic_ok = dist <= constants.c_d * eps2;
    let (x, y) = (gamma[i], gamma[j]);
    let r = model.distance(x, zp)? + 0.5 * delta;
    let s = model.distance(y, zp)? + 0.5 * delta;
    let lentil = Lentil { x, y, r, s };
    let covered = delta < r.min(s) && lentil.contains(model, z);
    Ok(CoverOutcome { geodesic_ok, covered })
}

pub fn lentil_geometry_checks<R: Rng>(
    model: &ManifoldModel,
    constants: &GeometryConstants,
    params: &LentilCheckParams,
    rng: &mut R,
) -> Result<LentilCheckReport, GeometryError> {
    let c_diam = constants.fundamental.c_diam;
    let mut report = LentilCheckReport {
        lentils: 0,
        diameter_failures: 0,
        max_diameter_ratio: 0.0,
        midpoint_failures: 0,
        ball_failures: 0,
        transversal_failures: 0,
        min_transversal_ratio: f64::INFINITY,
        cover_points: 0,
        cover_failures: 0,
        geodesic_failures: 0,
        status: Status::Pass,
    };
    while report.lentils < params.lentils {
        let x = random_point(model, rng, 0.98);
        let y = random_point(model, rng, 0.98);
        let d = model.ambient_distance(x, y)?;
        if d < 0.05 * c_diam {
            continue;
        }
        let delta = d * 10f64.powf(-3.0 + 2.5 * rng.random::<f64>());
        let r = delta + (d - delta) * rng.random::<f64>();
        let s = d - r + delta;
        if delta > r.min(s) {
            continue;
        }
        let lentil = Lentil { x, y, r, s };
        report.lentils += 1;

        let bound = delta + constants.c_e * delta.sqrt();
        let diam = sampled_diameter(model, &lentil, params.diameter_samples, rng)?;
        report.max_diameter_ratio = report.max_diameter_ratio.max(diam / bound);
        if diam > bound {
            report.diameter_failures += 1;
        }

        let m = lentil.midpoint(model)?;
        if (model.ambient_distance(m, x)? - (r - 0.5 * delta)).abs() > 1e-9 * (1.0 + r) {
            report.midpoint_failures += 1;
        }
        let mut ball_ok = true;
        for k in 0..64 {
            let dir = Vec2::from_polar(1.0, std::f64::consts::TAU * k as f64 / 64.0);
            for frac in [0.5, 0.999] {
                let z = model.ambient_exp(m, tangent(model, m, dir, frac * 0.5 * delta))?;
                ball_ok &= lentil.contains(model, z);
            }
        }
        if !ball_ok {
            report.ball_failures += 1;
        }

        let lower = (constants.c_h * (delta * r.min(s)).sqrt()).min(0.5 * c_diam);
        let radius = transversal_radius(model, &lentil, 2.0 * bound.max(lower))?;
        report.min_transversal_ratio = report.min_transversal_ratio.min(radius / lower);
        if radius <= lower {
            report.transversal_failures += 1;
        }
    }

    let eps1 = params.cover_eps1_fraction * c_diam;
    let gamma = synthetic_gamma(model, eps1)?;
    // Γ ⊂ B(∂M, ε₁) and ∂M ⊂ B(Γ, ε₂) with ε₂ = ε₁ by construction.
    let eps2 = eps1;
    let depth = eps1 + constants.c_g * eps2;
    while report.cover_points < params.interior_points {
        let z = random_point(model, rng, 1.0);
        if model.distance_to_boundary(z)?.0 < depth {
            continue;
        }
        report.cover_points += 1;
        let out = cover_point(model, constants, &gamma, z, eps2)?;
        if !out.geodesic_ok {
            report.geodesic_failures += 1;
        }
        if !out.covered {
            report.cover_failures += 1;
        }
    }

    let failures = report.diameter_failures
        + report.midpoint_failures
        + report.ball_failures
        + report.transversal_failures
        + report.cover_failures
        + report.geodesic_failures;
    report.status = if failures == 0 { Status::Pass } else { Status::Fail };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn euclidean_lentil_example() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let c = GeometryConstants::analytic(&m).unwrap();
        let l = Lentil { x: Vec2::new(-0.5, 0.0), y: Vec2::new(0.5, 0.0), r: 0.6, s: 0.6 };
        assert!((l.thickness(&m).unwrap() - 0.2).abs() < 1e-15);
        let mid = l.midpoint(&m).unwrap();
        assert!((mid.distance(l.x) - 0.5).abs() < 1e-12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let diam = sampled_diameter(&m, &l, 256, &mut rng).unwrap();
        // Exact diameter: the chord between the circle intersections, 2·√(0.36 − 0.25).
        let exact = 2.0 * 0.11f64.sqrt();
        assert!(diam <= exact + 1e-12 && diam > 0.95 * exact);
        assert!(diam <= 0.2 + c.c_e * 0.2f64.sqrt());
        let r = transversal_radius(&m, &l, 1.0).unwrap();
        assert!((r - 0.11f64.sqrt()).abs() < 1e-9);
        // Points on the axis between the sphere crossings are inside.
        assert!(l.contains(&m, Vec2::new(0.05, 0.0)));
        assert!(!l.contains(&m, Vec2::new(0.2, 0.0)));
    }

    #[test]
    fn checks_pass_on_small_runs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let params = LentilCheckParams { lentils: 20, interior_points: 10, diameter_samples: 64, ..Default::default() };
        for m in [ManifoldModel::euclidean_disk(1.0).unwrap(), ManifoldModel::curved_disk(-1.0, 0.6).unwrap()] {
            let c = GeometryConstants::analytic(&m).unwrap();
            let r = lentil_geometry_checks(&m, &c, &params, &mut rng).unwrap();
            assert_eq!(r.status, Status::Pass, "{r:?}");
        }
    }
}
