//! Certified reconstruction: boundary proximity of sources, the set `Γ` of
//! near-boundary sources, lentil certificates, the labeling `α` and the
//! density and labeled Gromov–Hausdorff bounds.

pub mod checks;
pub mod reverse;
pub mod window;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::GeometryConstants;
use crate::disentangle::ArrivalFunction;
use crate::geometry::{boundary_hessian, critical_points, BoundaryGrid, BoundaryLocation, CriticalKind, GeometryError};
use crate::observables::DiscreteSpace;
use crate::par;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReconstructError {
    #[error("source {tag}: {source}")]
    Critical { tag: usize, source: GeometryError },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("every boundary proximity value is infinite; α is undefined")]
    NoFiniteProximity,
    #[error("reconstruction needs at least one source")]
    Empty,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// A length that may be infinite, serialized as a number or `"infinity"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Bound {
    Finite(f64),
    Infinite,
}

impl Bound {
    pub fn value(self) -> f64 {
        match self {
            Bound::Finite(v) => v,
            Bound::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Bound {
        match self {
            Bound::Finite(v) => Bound::Finite(f(v)),
            Bound::Infinite => Bound::Infinite,
        }
    }

    pub fn from_value(v: f64) -> Bound {
        if v.is_finite() {
            Bound::Finite(v)
        } else {
            Bound::Infinite
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(v) => fmt::Display::fmt(v, f),
            Bound::Infinite => write!(f, "infinity"),
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(v) => s.serialize_f64(*v),
            Bound::Infinite => s.serialize_str("infinity"),
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Bound::Finite(v)),
            Repr::Text(t) if t == "infinity" => Ok(Bound::Infinite),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"infinity\", got {t:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructParams {
    /// Values of `r` tested per pair of `Γ`.
    pub r_grid: usize,
    /// Half-width in nodes of the boundary Hessian stencil.
    pub stencil: usize,
    /// Number of `ε₁` values in the sweep.
    pub sweep_points: usize,
}

impl Default for ReconstructParams {
    fn default() -> Self {
        ReconstructParams {
            r_grid: 32,
            stencil: 1,
            sweep_points: 24,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub location: BoundaryLocation,
    pub kind: CriticalKind,
    /// Boundary Hessian of the arrival function at the critical point.
    pub lambda: f64,
    /// Richardson estimate of the stencil error in `lambda`.
    pub lambda_error: f64,
    pub e: Bound,
    /// Change of `e` when `lambda` is lowered by `lambda_error`.
    pub allowance: Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceProximity {
    pub tag: usize,
    pub critical: Vec<CriticalEstimate>,
}

impl SourceProximity {
    pub fn min_e(&self) -> Bound {
        self.critical.iter().map(|c| c.e).fold(Bound::Infinite, |a, b| if b < a { b } else { a })
    }
}

/// Proximity quantities that do not depend on `ε₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximityEstimate {
    pub grid: BoundaryGrid,
    pub sources: Vec<SourceProximity>,
    /// `E(x)` at every grid node.
    pub node_e: Vec<Bound>,
    /// Minimizing source of `E(x)` at every node.
    pub node_source: Vec<Option<usize>>,
    /// `E = max_x E(x)`.
    pub e: Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximityReport {
    #[serde(flatten)]
    pub estimate: ProximityEstimate,
    pub epsilon1: f64,
    pub epsilon2: Bound,
    pub delta: Bound,
    /// Indices (into the space) of the sources in `Γ`.
    pub gamma: Vec<usize>,
}

/// `C_JF / (λ − C_SFF)`, or infinity when `λ ≤ C_SFF`.
pub fn proximity_from_hessian(lambda: f64, constants: &GeometryConstants) -> Bound {
    let f = &constants.fundamental;
    if lambda > f.c_sff {
        Bound::Finite(f.c_jf / (lambda - f.c_sff))
    } else {
        Bound::Infinite
    }
}

fn source_proximity(
    grid: &BoundaryGrid,
    function: &ArrivalFunction,
    constants: &GeometryConstants,
    stencil: usize,
) -> Result<SourceProximity, ReconstructError> {
    let wrap = |source| ReconstructError::Critical { tag: function.tag, source };
    let f = &function.values;
    let cps = critical_points(f).map_err(wrap)?;
    let h = grid.spacing();
    let mut critical = Vec::with_capacity(cps.len());
    for cp in cps {
        let lambda = boundary_hessian(f, h, cp.location, stencil).map_err(wrap)?;
        let coarse = boundary_hessian(f, h, cp.location, 2 * stencil).map_err(wrap)?;
        let lambda_error = (coarse - lambda).abs() / 3.0;
        let e = proximity_from_hessian(lambda, constants);
        let allowance = match (e, proximity_from_hessian(lambda - lambda_error, constants)) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::Finite(b - a),
            (Bound::Infinite, _) => Bound::Finite(0.0),
            _ => Bound::Infinite,
        };
        critical.push(CriticalEstimate {
            location: cp.location,
            kind: cp.kind,
            lambda,
            lambda_error,
            e,
            allowance,
        });
    }
    Ok(SourceProximity { tag: function.tag, critical })
}

/// `E(p,y)` at every critical point, `E(x)` on the grid and `E`.
pub fn estimate_proximity(
    grid: &BoundaryGrid,
    functions: &[ArrivalFunction],
    constants: &GeometryConstants,
    stencil: usize,
) -> Result<ProximityEstimate, ReconstructError> {
    let sources = par::try_map_range(functions.len(), |k| source_proximity(grid, &functions[k], constants, stencil))?;
    let finite: Vec<(BoundaryLocation, f64, usize)> = sources
        .iter()
        .enumerate()
        .flat_map(|(k, s)| {
            s.critical.iter().filter_map(move |c| match c.e {
                Bound::Finite(v) => Some((c.location, v, k)),
                Bound::Infinite => None,
            })
        })
        .collect();
    let per_node = par::map_range(grid.n, |i| {
        let x = BoundaryLocation::at_node(i);
        let mut best = (f64::INFINITY, None);
        for &(y, e, k) in &finite {
            let v = e + grid.arc_distance(x, y);
            if v < best.0 {
                best = (v, Some(k));
            }
        }
        best
    });
    let node_e: Vec<Bound> = per_node.iter().map(|b| Bound::from_value(b.0)).collect();
    let node_source = per_node.iter().map(|b| b.1).collect();
    let e = node_e.iter().copied().fold(Bound::Finite(0.0), |a, b| if b > a { b } else { a });
    Ok(ProximityEstimate {
        grid: *grid,
        sources,
        node_e,
        node_source,
        e,
    })
}

/// `Γ = {p : min_y E(p,y) < ε₁}`.
pub fn gamma_set(estimate: &ProximityEstimate, eps1: f64) -> Vec<usize> {
    (0..estimate.sources.len())
        .filter(|&k| estimate.sources[k].min_e().value() < eps1)
        .collect()
}

impl ProximityEstimate {
    pub fn with_epsilon1(&self, eps1: f64, constants: &GeometryConstants) -> ProximityReport {
        let epsilon2 = self.e.map(|e| eps1 + e);
        ProximityReport {
            estimate: self.clone(),
            epsilon1: eps1,
            epsilon2,
            delta: epsilon2.map(|e2| constants.c9 * e2),
            gamma: gamma_set(self, eps1),
        }
    }
}

pub fn proximity(
    grid: &BoundaryGrid,
    functions: &[ArrivalFunction],
    constants: &GeometryConstants,
    eps1: f64,
    stencil: usize,
) -> Result<ProximityReport, ReconstructError> {
    Ok(estimate_proximity(grid, functions, constants, stencil)?.with_epsilon1(eps1, constants))
}

/// `α(x)`: the source minimizing `min_y E(p,y) + d_∂M(x,y)`, smaller index on ties.
pub fn alpha_map(estimate: &ProximityEstimate) -> Result<Vec<usize>, ReconstructError> {
    estimate
        .node_source
        .iter()
        .map(|s| s.ok_or(ReconstructError::NoFiniteProximity))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LentilCertificate {
    pub x: usize,
    pub y: usize,
    pub r: f64,
    pub s: f64,
    pub thickness: f64,
    pub witness: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub tested: usize,
    pub failed: usize,
    pub r_grid: usize,
    /// The first failing lentils, for diagnostics.
    pub failures: Vec<LentilCertificate>,
}

impl Certificates {
    pub fn pass(&self) -> bool {
        self.failed == 0
    }
}

const MAX_LISTED_FAILURES: usize = 64;

/// The `r` values tested for a pair at distance `d`.
pub fn lentil_radii(d: f64, delta: f64, r_grid: usize) -> Vec<f64> {
    (0..r_grid)
        .map(|k| delta + (d - delta) * (k + 1) as f64 / (r_grid + 1) as f64)
        .collect()
}

fn pair_certificates(dist: &[Vec<f64>], x: usize, y: usize, delta: f64, r_grid: usize) -> Vec<LentilCertificate> {
    let d = dist[x][y];
    // Sources sorted by distance to x; prefix minima of the distance to y
    // answer every lentil of the pair.
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[a][x].total_cmp(&dist[b][x]).then(a.cmp(&b)));
    let mut prefix = Vec::with_capacity(order.len());
    let mut best: (f64, usize) = (f64::INFINITY, usize::MAX);
    for &w in &order {
        if dist[w][y] < best.0 {
            best = (dist[w][y], w);
        }
        prefix.push(best);
    }
    lentil_radii(d, delta, r_grid)
        .into_iter()
        .map(|r| {
            let s = d - r + delta;
            let count = order.partition_point(|&w| dist[w][x] < r);
            let witness = if count > 0 && prefix[count - 1].0 < s { Some(prefix[count - 1].1) } else { None };
            LentilCertificate {
                x,
                y,
                r,
                s,
                thickness: r + s - d,
                witness,
            }
        })
        .collect()
}

/// Tests `L^{x,y}_{r, d(x,y)−r+δ} ∩ P ≠ ∅` for all pairs of `Γ` more than `δ`
/// apart, using only the recovered distances.
pub fn lentil_certificates(dist: &[Vec<f64>], gamma: &[usize], delta: f64, r_grid: usize) -> Certificates {
    let pairs: Vec<(usize, usize)> = gamma
        .iter()
        .enumerate()
        .flat_map(|(i, &x)| gamma[i + 1..].iter().map(move |&y| (x, y)))
        .filter(|&(x, y)| dist[x][y] > delta)
        .collect();
    let per_pair = par::map_range(pairs.len(), |k| {
        let (x, y) = pairs[k];
        let certs = pair_certificates(dist, x, y, delta, r_grid);
        let failures: Vec<LentilCertificate> = certs.iter().filter(|c| c.witness.is_none()).copied().collect();
        (certs.len(), failures)
    });
    let mut out = Certificates {
        tested: 0,
        failed: 0,
        r_grid,
        failures: Vec::new(),
    };
    for (tested, failures) in per_pair {
        out.tested += tested;
        out.failed += failures.len();
        for f in failures {
            if out.failures.len() < MAX_LISTED_FAILURES {
                out.failures.push(f);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Status {
    Pass,
    Fail,
    NotCertified,
    NotApplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotCertified => "NOT-CERTIFIED",
            Status::NotApplicable => "NOT-APPLICABLE",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBound {
    pub value: Bound,
    pub status: Status,
}

fn certified(value: Bound, certificates: &Certificates) -> CertifiedBound {
    CertifiedBound {
        value,
        status: if certificates.pass() { Status::Pass } else { Status::NotCertified },
    }
}

/// `ε = C₁₀ ε₂ + C₁₁ √ε₂`.
pub fn density_bound(report: &ProximityReport, certificates: &Certificates, constants: &GeometryConstants) -> CertifiedBound {
    certified(report.epsilon2.map(|e2| constants.density_epsilon(e2)), certificates)
}

/// `C₁₂ ε₂ + C₁₁ √ε₂`.
pub fn lgh_bound(report: &ProximityReport, certificates: &Certificates, constants: &GeometryConstants) -> CertifiedBound {
    certified(report.epsilon2.map(|e2| constants.lgh_epsilon(e2)), certificates)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub tested: usize,
    pub failed: usize,
}

/// The reconstruction report as written by the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructReport {
    pub epsilon1: f64,
    #[serde(rename = "E")]
    pub e: Bound,
    pub epsilon2: Bound,
    pub delta: Bound,
    /// Tags of the sources in `Γ`.
    pub gamma_indices: Vec<usize>,
    pub certificates: CertificateSummary,
    pub epsilon_bound: Bound,
    pub lgh_bound: Bound,
    pub status: Status,
    /// Half the grid spacing, the extra labeling error from using grid nodes as labels.
    pub label_slack: f64,
    pub constants_estimated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub report: ReconstructReport,
    pub proximity: ProximityReport,
    pub certificates: Certificates,
    /// Index into the space per grid node; absent when `E` is infinite.
    pub alpha: Option<Vec<usize>>,
}

fn assemble_report(
    space: &DiscreteSpace,
    proximity: ProximityReport,
    certificates: Certificates,
    constants: &GeometryConstants,
) -> Reconstruction {
    let density = density_bound(&proximity, &certificates, constants);
    let lgh = lgh_bound(&proximity, &certificates, constants);
    let status = if !certificates.pass() {
        Status::Fail
    } else if !proximity.epsilon2.is_finite() {
        Status::NotCertified
    } else {
        Status::Pass
    };
    let alpha = alpha_map(&proximity.estimate).ok();
    let report = ReconstructReport {
        epsilon1: proximity.epsilon1,
        e: proximity.estimate.e,
        epsilon2: proximity.epsilon2,
        delta: proximity.delta,
        gamma_indices: proximity.gamma.iter().map(|&k| space.points[k]).collect(),
        certificates: CertificateSummary {
            tested: certificates.tested,
            failed: certificates.failed,
        },
        epsilon_bound: density.value,
        lgh_bound: lgh.value,
        status,
        label_slack: 0.5 * space.grid.spacing(),
        constants_estimated: constants.estimated,
    };
    Reconstruction {
        report,
        proximity,
        certificates,
        alpha,
    }
}

fn certify(
    space: &DiscreteSpace,
    estimate: &ProximityEstimate,
    constants: &GeometryConstants,
    eps1: f64,
    params: &ReconstructParams,
) -> Reconstruction {
    let proximity = estimate.with_epsilon1(eps1, constants);
    let certificates = match proximity.delta {
        Bound::Finite(delta) => lentil_certificates(&space.dist, &proximity.gamma, delta, params.r_grid),
        Bound::Infinite => Certificates {
            tested: 0,
            failed: 0,
            r_grid: params.r_grid,
            failures: Vec::new(),
        },
    };
    assemble_report(space, proximity, certificates, constants)
}

fn check_inputs(space: &DiscreteSpace, params: &ReconstructParams) -> Result<(), ReconstructError> {
    if space.is_empty() {
        return Err(ReconstructError::Empty);
    }
    if params.r_grid == 0 || params.stencil == 0 {
        return Err(ReconstructError::Parameter("r_grid and stencil must be positive".into()));
    }
    Ok(())
}

/// Full certification at a fixed `ε₁`.
pub fn reconstruct(
    space: &DiscreteSpace,
    constants: &GeometryConstants,
    eps1: f64,
    params: &ReconstructParams,
) -> Result<Reconstruction, ReconstructError> {
    check_inputs(space, params)?;
    if !(eps1 >= 0.0) {
        return Err(ReconstructError::Parameter(format!("epsilon1 must be non-negative, got {eps1}")));
    }
    let estimate = estimate_proximity(&space.grid, &space.functions, constants, params.stencil)?;
    Ok(certify(space, &estimate, constants, eps1, params))
}

/// Log-spaced `ε₁` values from `10⁻³·C_diam` to `C_diam`.
pub fn epsilon1_grid(constants: &GeometryConstants, points: usize) -> Vec<f64> {
    let hi = constants.fundamental.c_diam;
    let lo = 1e-3 * hi;
    let m = points.max(2);
    (0..m)
        .map(|k| lo * (hi / lo).powf(k as f64 / (m - 1) as f64))
        .collect()
}

/// Scans `ε₁` and keeps the smallest certified lGH bound (smaller `ε₁` on
/// ties). Without any certified finite bound the largest `ε₁` is reported.
pub fn sweep_epsilon1(
    space: &DiscreteSpace,
    constants: &GeometryConstants,
    params: &ReconstructParams,
) -> Result<Reconstruction, ReconstructError> {
    check_inputs(space, params)?;
    let estimate = estimate_proximity(&space.grid, &space.functions, constants, params.stencil)?;
    let grid = epsilon1_grid(constants, params.sweep_points);
    let mut best: Option<Reconstruction> = None;
    let mut last = None;
    for &eps1 in &grid {
        let rec = certify(space, &estimate, constants, eps1, params);
        if rec.report.status == Status::Pass && rec.report.lgh_bound.is_finite() {
            let better = best.as_ref().is_none_or(|b| rec.report.lgh_bound < b.report.lgh_bound);
            if better {
                best = Some(rec);
                continue;
            }
        }
        last = Some(rec);
    }
    Ok(match best {
        Some(b) => b,
        None => match last {
            Some(l) => l,
            None => certify(space, &estimate, constants, grid[grid.len() - 1], params),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_distance_function, ManifoldModel, Vec2};
    use crate::observables::{assemble, default_obs_tol};

    fn functions(m: &ManifoldModel, g: &BoundaryGrid, pts: &[Vec2]) -> Vec<ArrivalFunction> {
        pts.iter()
            .enumerate()
            .map(|(tag, p)| ArrivalFunction { tag, values: boundary_distance_function(m, *p, g).unwrap() })
            .collect()
    }

    #[test]
    fn bound_serialization() {
        assert_eq!(serde_json::to_string(&Bound::Infinite).unwrap(), "\"infinity\"");
        assert_eq!(serde_json::to_string(&Bound::Finite(0.5)).unwrap(), "0.5");
        let b: Bound = serde_json::from_str("\"infinity\"").unwrap();
        assert_eq!(b, Bound::Infinite);
        assert!(Bound::Finite(1e300) < Bound::Infinite);
    }

    #[test]
    fn proximity_of_shallow_source_on_unit_disk() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 4096);
        let c = GeometryConstants::analytic(&m).unwrap();
        let est = estimate_proximity(&g, &functions(&m, &g, &[Vec2::new(0.9, 0.0)]), &c, 1).unwrap();
        let min = est.sources[0].critical.iter().find(|c| c.kind == CriticalKind::Minimum).unwrap();
        // r_p'' = ρ/(1−ρ) = 9 at the nearest boundary point; E = 1/(9−1).
        assert!((min.lambda - 9.0).abs() < 1e-3, "{}", min.lambda);
        assert!((min.e.value() - 0.125).abs() < 1e-4);
        let max = est.sources[0].critical.iter().find(|c| c.kind == CriticalKind::Maximum).unwrap();
        assert_eq!(max.e, Bound::Infinite);
        assert!(min.e.value() >= 0.1);
    }

    #[test]
    fn infinite_branch() {
        let c = GeometryConstants::analytic(&ManifoldModel::euclidean_disk(1.0).unwrap()).unwrap();
        assert_eq!(proximity_from_hessian(1.0, &c), Bound::Infinite);
        assert_eq!(proximity_from_hessian(-3.0, &c), Bound::Infinite);
        assert_eq!(proximity_from_hessian(3.0, &c), Bound::Finite(0.5));
    }

    #[test]
    fn gamma_examples() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 2048);
        let c = GeometryConstants::analytic(&m).unwrap();
        let fs = functions(&m, &g, &[Vec2::new(0.95, 0.0), Vec2::new(0.0, 0.6)]);
        let est = estimate_proximity(&g, &fs, &c, 1).unwrap();
        assert_eq!(gamma_set(&est, 0.1), vec![0]);
        assert_eq!(gamma_set(&est, 1e9), vec![0, 1]);
        assert!(gamma_set(&est, 0.0).is_empty());
        // Deep source: E(p,y) large.
        let deep = estimate_proximity(&g, &functions(&m, &g, &[Vec2::new(0.1, 0.0)]), &c, 1).unwrap();
        assert!(deep.sources[0].min_e().value() > 0.1);
    }

    #[test]
    fn node_proximity_is_bounded_by_every_pair() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 1024);
        let c = GeometryConstants::analytic(&m).unwrap();
        let fs = functions(&m, &g, &[Vec2::new(0.9, 0.1), Vec2::new(-0.85, -0.2), Vec2::new(0.0, 0.93)]);
        let est = estimate_proximity(&g, &fs, &c, 1).unwrap();
        for (i, ex) in est.node_e.iter().enumerate() {
            for s in &est.sources {
                for cp in &s.critical {
                    if let Bound::Finite(e) = cp.e {
                        assert!(ex.value() <= e + g.arc_distance(BoundaryLocation::at_node(i), cp.location) + 1e-15);
                    }
                }
            }
        }
        assert_eq!(est.e.value(), est.node_e.iter().map(|b| b.value()).fold(0.0, f64::max));
    }

    #[test]
    fn alpha_splits_antipodal_pair() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 1024);
        let c = GeometryConstants::analytic(&m).unwrap();
        let est = estimate_proximity(&g, &functions(&m, &g, &[Vec2::new(0.95, 0.0), Vec2::new(-0.95, 0.0)]), &c, 1).unwrap();
        let alpha = alpha_map(&est).unwrap();
        let zeros = alpha.iter().filter(|&&a| a == 0).count();
        assert!((511..=513).contains(&zeros), "{zeros}");
        assert_eq!(alpha[0], 0);
        assert_eq!(alpha[512], 1);
        let single = estimate_proximity(&g, &functions(&m, &g, &[Vec2::new(0.95, 0.0)]), &c, 1).unwrap();
        assert!(alpha_map(&single).unwrap().iter().all(|&a| a == 0));
        let deep = estimate_proximity(&g, &functions(&m, &g, &[Vec2::new(0.2, 0.0)]), &c, 1).unwrap();
        assert_eq!(alpha_map(&deep), Err(ReconstructError::NoFiniteProximity));
    }

    #[test]
    fn lentil_certificate_examples() {
        // Two boundary-near points only: every lentil is empty of sources.
        let dist = vec![vec![0.0, 1.8], vec![1.8, 0.0]];
        let c = lentil_certificates(&dist, &[0, 1], 0.2, 8);
        assert_eq!((c.tested, c.failed), (8, 8));
        assert!(c.failures.iter().all(|f| (f.thickness - 0.2).abs() < 1e-12));
        // Close pair: no lentils.
        assert_eq!(lentil_certificates(&dist, &[0, 1], 2.0, 8).tested, 0);
        // A point in the middle witnesses lentils around it.
        let dist = vec![vec![0.0, 1.0, 0.5], vec![1.0, 0.0, 0.5], vec![0.5, 0.5, 0.0]];
        let c = lentil_certificates(&dist, &[0, 1], 0.2, 1);
        assert_eq!((c.tested, c.failed), (1, 0));
    }

    #[test]
    fn density_bound_arithmetic() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let c = GeometryConstants::analytic(&m).unwrap();
        assert!((c.density_epsilon(0.01) - (0.07 + 4.0 * (10.0 / std::f64::consts::PI).sqrt() * 0.1)).abs() < 1e-12);
        assert_eq!(c.density_epsilon(0.0), 0.0);
        assert!((c.lgh_epsilon(0.01) - c.density_epsilon(0.01) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn dense_scene_certifies() {
        use crate::scene::{forward, poisson_sources, ForwardOptions, PoissonSpec, Window};
        use rand::SeedableRng;
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 1024);
        let c = GeometryConstants::analytic(&m).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let spec = PoissonSpec { intensity: 200.0 / std::f64::consts::PI, t_max: 1.0, density: None, margin: None };
        let sources = poisson_sources(&m, &spec, &mut rng).unwrap();
        let data = forward(&m, &sources, &g, Window::unbounded(), ForwardOptions::default(), &mut rng).unwrap();
        let sep = crate::disentangle::separate_with_labels(&data.cloud, &data.labels).unwrap();
        let space = assemble(&g, &sep.functions, default_obs_tol(&g)).unwrap();
        let rec = sweep_epsilon1(&space, &c, &ReconstructParams::default()).unwrap();
        assert_eq!(rec.report.status, Status::Pass, "{:?}", rec.report);
        assert!(rec.report.lgh_bound.is_finite());
        assert_eq!(rec.report.epsilon2.value(), rec.report.epsilon1 + rec.report.e.value());
        assert_eq!(rec.report.delta.value(), c.c9 * rec.report.epsilon2.value());
    }
}
