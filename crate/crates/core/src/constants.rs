//! Constants of quantitative simplicity and the constants derived from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::geodesic::{self, GeodesicState};
use crate::geometry::{GeometryError, ManifoldModel, ModelKind, Vec2};
use crate::par;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstantsError {
    #[error("constraint violated: {0}")]
    Violation(String),
    #[error("constant {name} must be {requirement}, got {value}")]
    InvalidValue {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("sample of {got} points is below the configured minimum {min}")]
    SampleTooSmall { got: usize, min: usize },
    #[error("no closed-form constants for this model: {0}")]
    NoAnalytic(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The nine fundamental constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalConstants {
    #[serde(rename = "C_diam")]
    pub c_diam: f64,
    #[serde(rename = "C_sec_minus")]
    pub c_sec_minus: f64,
    #[serde(rename = "C_sec_plus")]
    pub c_sec_plus: f64,
    #[serde(rename = "C_exp")]
    pub c_exp: f64,
    #[serde(rename = "C_JF")]
    pub c_jf: f64,
    #[serde(rename = "C_SFF")]
    pub c_sff: f64,
    #[serde(rename = "C_dist")]
    pub c_dist: f64,
    #[serde(rename = "C_H1")]
    pub c_h1: f64,
    #[serde(rename = "C_H2")]
    pub c_h2: f64,
}

/// Fundamental constants plus every derived constant, serialized flat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    #[serde(flatten)]
    pub fundamental: FundamentalConstants,
    #[serde(rename = "C_a")]
    pub c_a: f64,
    #[serde(rename = "C_b")]
    pub c_b: f64,
    #[serde(rename = "C_c")]
    pub c_c: f64,
    #[serde(rename = "C_d")]
    pub c_d: f64,
    #[serde(rename = "C_e")]
    pub c_e: f64,
    #[serde(rename = "C_f")]
    pub c_f: f64,
    #[serde(rename = "C_g")]
    pub c_g: f64,
    #[serde(rename = "C_h")]
    pub c_h: f64,
    #[serde(rename = "C_i")]
    pub c_i: f64,
    #[serde(rename = "C_9")]
    pub c9: f64,
    #[serde(rename = "C_10")]
    pub c10: f64,
    #[serde(rename = "C_11")]
    pub c11: f64,
    #[serde(rename = "C_12")]
    pub c12: f64,
    #[serde(rename = "C_19")]
    pub c19: f64,
    #[serde(rename = "C_25")]
    pub c25: f64,
    #[serde(rename = "C_26")]
    pub c26: f64,
    #[serde(rename = "C_27")]
    pub c27: f64,
    /// True when the fundamental constants came from sampling the model.
    #[serde(default)]
    pub estimated: bool,
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

pub fn sinhc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sinh() / x
    }
}

pub fn vercos(x: f64) -> f64 {
    1.0 + x.cos()
}

/// `C_sec+` floor making `C_diam √C_sec+ = π/2`.
pub fn default_sec_plus_floor(c_diam: f64) -> f64 {
    (PI / (2.0 * c_diam)).powi(2)
}

impl FundamentalConstants {
    fn validate(&self) -> Result<(), ConstantsError> {
        let positive = [
            ("C_diam", self.c_diam),
            ("C_sec_plus", self.c_sec_plus),
            ("C_exp", self.c_exp),
            ("C_JF", self.c_jf),
            ("C_SFF", self.c_sff),
            ("C_dist", self.c_dist),
            ("C_H1", self.c_h1),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConstantsError::InvalidValue {
                    name,
                    requirement: "positive and finite",
                    value,
                });
            }
        }
        for (name, value) in [("C_sec_minus", self.c_sec_minus), ("C_H2", self.c_h2)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ConstantsError::InvalidValue {
                    name,
                    requirement: "non-negative and finite",
                    value,
                });
            }
        }
        let product = self.c_diam * self.c_sec_plus.sqrt();
        if product >= PI {
            return Err(ConstantsError::Violation(format!(
                "C_diam·√C_sec+ = {product} must be < π"
            )));
        }
        Ok(())
    }

    /// Analytic constants of the Euclidean disk and of negatively curved disks.
    pub fn analytic(model: &ManifoldModel) -> Result<Self, ConstantsError> {
        let r = model.radius();
        match model.kind() {
            ModelKind::EuclideanDisk => {
                let c_diam = 2.0 * r;
                Ok(FundamentalConstants {
                    c_diam,
                    c_sec_minus: 0.0,
                    c_sec_plus: default_sec_plus_floor(c_diam),
                    c_exp: 1.0,
                    c_jf: 1.0,
                    c_sff: 1.0 / r,
                    c_dist: PI / 2.0,
                    c_h1: 1.0,
                    c_h2: 0.0,
                })
            }
            ModelKind::CurvedDisk { kappa } if kappa < 0.0 => {
                let k = (-kappa).sqrt();
                let rho = crate::geometry::model::radial_distance(kappa, r);
                let c_diam = 2.0 * rho;
                let kd = k * c_diam;
                Ok(FundamentalConstants {
                    c_diam,
                    c_sec_minus: -kappa,
                    c_sec_plus: default_sec_plus_floor(c_diam),
                    c_exp: 1.0,
                    c_jf: kd / kd.tanh(),
                    c_sff: k / (k * rho).tanh(),
                    c_dist: PI * (k * rho).sinh() / (2.0 * k * rho),
                    c_h1: 1.0,
                    c_h2: 0.0,
                })
            }
            other => Err(ConstantsError::NoAnalytic(format!("{other:?}"))),
        }
    }
}

impl GeometryConstants {
    /// Derived constants; fails when the diameter-curvature bound is violated.
    pub fn derive(f: FundamentalConstants) -> Result<Self, ConstantsError> {
        f.validate()?;
        let c_a = sinc(f.c_diam * f.c_sec_plus.sqrt());
        let c_b = sinhc(f.c_diam * f.c_sec_minus.sqrt());
        let c_c = vercos(f.c_diam * f.c_sec_plus.sqrt());
        let c_d = f.c_exp * c_b;
        let c_e = 2.0 * 5f64.sqrt() * c_a.sqrt() * c_b * f.c_diam.sqrt();
        let c_f = 1.0 / c_a;
        let c_g = 3.0 * c_d;
        let c_h = 2f64.powf(-1.5) * c_c.powf(0.25);
        let c_i = 2.0 / c_c.sqrt();
        let c9 = 2.0 * f.c_exp * c_b;
        let c10 = 2.0 + 5.0 * f.c_exp * c_b;
        let c11 = 2.0 * 10f64.sqrt() * f.c_diam.sqrt() * f.c_exp.sqrt() * c_a.sqrt() * c_b.powf(1.5);
        let c12 = 3.0 + 5.0 * f.c_exp * c_b;
        let c19 = 1.0 / (f.c_exp * c_b);
        let c25 = f.c_h1 / (2.0 * (f.c_h2 + f.c_sff));
        let bracket = c19 + 2.0 * f.c_jf / f.c_h1 + 2.0 * f.c_dist;
        let c26 = 1.0 / (2.0 * c12 * bracket);
        let c27 = 1.0 / (4.0 * c11 * c11 * bracket);
        let out = GeometryConstants {
            fundamental: f,
            c_a,
            c_b,
            c_c,
            c_d,
            c_e,
            c_f,
            c_g,
            c_h,
            c_i,
            c9,
            c10,
            c11,
            c12,
            c19,
            c25,
            c26,
            c27,
            estimated: false,
        };
        for (name, v) in out.derived_values() {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConstantsError::InvalidValue {
                    name,
                    requirement: "positive and finite",
                    value: v,
                });
            }
        }
        Ok(out)
    }

    pub fn analytic(model: &ManifoldModel) -> Result<Self, ConstantsError> {
        Self::derive(FundamentalConstants::analytic(model)?)
    }

    pub fn derived_values(&self) -> [(&'static str, f64); 17] {
        [
            ("C_a", self.c_a),
            ("C_b", self.c_b),
            ("C_c", self.c_c),
            ("C_d", self.c_d),
            ("C_e", self.c_e),
            ("C_f", self.c_f),
            ("C_g", self.c_g),
            ("C_h", self.c_h),
            ("C_i", self.c_i),
            ("C_9", self.c9),
            ("C_10", self.c10),
            ("C_11", self.c11),
            ("C_12", self.c12),
            ("C_19", self.c19),
            ("C_25", self.c25),
            ("C_26", self.c26),
            ("C_27", self.c27),
        ]
    }

    /// `ε̂ = min(C₂₅, C₂₆ ε, C₂₇ ε²)`.
    pub fn hat_epsilon(&self, eps: f64) -> f64 {
        self.c25.min(self.c26 * eps).min(self.c27 * eps * eps)
    }

    /// `C₁₀ ε₂ + C₁₁ √ε₂`.
    pub fn density_epsilon(&self, eps2: f64) -> f64 {
        self.c10 * eps2 + self.c11 * eps2.sqrt()
    }

    /// `C₁₂ ε₂ + C₁₁ √ε₂`.
    pub fn lgh_epsilon(&self, eps2: f64) -> f64 {
        self.c12 * eps2 + self.c11 * eps2.sqrt()
    }
}

/// Sampling plan for [`estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSpec {
    /// Boundary and interior sample counts.
    pub points: usize,
    /// Headings per geodesic start point for the Jacobi-field constants.
    pub directions: usize,
    pub safety: f64,
    pub min_points: usize,
}

impl Default for EstimateSpec {
    fn default() -> Self {
        EstimateSpec {
            points: 32,
            directions: 16,
            safety: 1.1,
            min_points: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    /// Sample extrema of the defining quantities.
    pub raw: FundamentalConstants,
    /// `raw` inflated by the safety factor in the conservative direction.
    pub inflated: FundamentalConstants,
}

/// Estimates the fundamental constants by extremizing their defining
/// quantities over a deterministic sample of the model.
pub fn estimate(model: &ManifoldModel, spec: &EstimateSpec) -> Result<Estimate, ConstantsError> {
    if spec.points < spec.min_points {
        return Err(ConstantsError::SampleTooSmall {
            got: spec.points,
            min: spec.min_points,
        });
    }
    let n = spec.points;
    let len = model.boundary_length();
    let boundary: Vec<Vec2> = (0..n).map(|i| model.boundary_point(i as f64 * len / n as f64)).collect();
    let interior = interior_sample(model.radius(), n);

    // Diameter and boundary chord ratio over boundary pairs.
    let pair_stats = par::try_map_range(n, |i| -> Result<(f64, f64), GeometryError> {
        let mut diam: f64 = 0.0;
        let mut ratio: f64 = 1.0;
        for j in (i + 1)..n {
            let d = model.distance(boundary[i], boundary[j])?;
            let k = j - i;
            let arc = (k.min(n - k)) as f64 * len / n as f64;
            diam = diam.max(d);
            if d > 0.0 {
                ratio = ratio.max(arc / d);
            }
        }
        Ok((diam, ratio))
    })?;
    let c_diam = pair_stats.iter().map(|p| p.0).fold(0.0, f64::max);
    let c_dist = pair_stats.iter().map(|p| p.1).fold(1.0, f64::max);

    let c_sff = (0..n)
        .map(|i| model.second_fundamental_form(i as f64 * len / n as f64))
        .fold(0.0, f64::max);

    let curv: Vec<f64> = interior
        .iter()
        .chain(boundary.iter())
        .map(|&p| model.gauss_curvature(p))
        .collect();
    let k_min = curv.iter().cloned().fold(f64::INFINITY, f64::min);
    let k_max = curv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // Lipschitz quotients of the logarithm: |log_x a − log_x b|_g / d(a, b).
    let c_exp = par::try_map_range(interior.len(), |i| -> Result<f64, GeometryError> {
        let x = interior[i];
        let c = model.conformal(x);
        let targets: Vec<Vec2> = interior
            .iter()
            .chain(boundary.iter())
            .enumerate()
            .filter(|(j, _)| *j != i && j % 3 == i % 3)
            .map(|(_, p)| *p)
            .collect();
        let logs: Vec<Vec2> = targets.iter().map(|&t| model.log_map(x, t)).collect::<Result<_, _>>()?;
        let mut best: f64 = 0.0;
        for a in 0..targets.len() {
            for b in (a + 1)..targets.len() {
                let d = model.distance(targets[a], targets[b])?;
                if d > 1e-9 {
                    best = best.max((logs[a] - logs[b]).norm() / c / d);
                }
            }
        }
        Ok(best)
    })?
    .into_iter()
    .fold(0.0, f64::max);

    // Jacobi fields along geodesics leaving boundary points inward and
    // interior points in all directions.
    let starts: Vec<(Vec2, f64)> = boundary
        .iter()
        .flat_map(|&b| {
            let inward = (-b).angle();
            (0..spec.directions).map(move |k| {
                let a = inward - 0.5 * PI + PI * (k as f64 + 0.5) / spec.directions as f64;
                (b, a)
            })
        })
        .chain(interior.iter().flat_map(|&p| {
            (0..spec.directions).map(move |k| (p, 2.0 * PI * k as f64 / spec.directions as f64))
        }))
        .collect();
    let step = model.scale() / 256.0;
    let jac = par::map_slice(&starts, |&(p, a)| jacobi_extremes(model, p, a, step));
    let c_jf_raw = jac.iter().map(|j| j.0).fold(1.0, f64::max);
    let h2_gap = |c_h1: f64| {
        jac.iter()
            .flat_map(|j| j.1.iter())
            .map(|&(t, ratio)| c_h1 / t - ratio)
            .fold(0.0, f64::max)
    };

    let raw_sec_plus = if k_max > 0.0 { k_max } else { default_sec_plus_floor(c_diam) };
    let raw = FundamentalConstants {
        c_diam,
        c_sec_minus: (-k_min).max(0.0),
        c_sec_plus: raw_sec_plus,
        c_exp,
        c_jf: c_jf_raw,
        c_sff,
        c_dist,
        c_h1: 1.0,
        c_h2: h2_gap(1.0),
    };
    let s = spec.safety;
    let inflated_diam = c_diam * s;
    let inflated_h1 = 1.0 / s;
    let inflated = FundamentalConstants {
        c_diam: inflated_diam,
        c_sec_minus: raw.c_sec_minus * s,
        c_sec_plus: if k_max > 0.0 { k_max * s } else { default_sec_plus_floor(inflated_diam) },
        c_exp: c_exp * s,
        c_jf: c_jf_raw * s,
        c_sff: c_sff * s,
        c_dist: c_dist * s,
        c_h1: inflated_h1,
        c_h2: h2_gap(inflated_h1) * s,
    };
    Ok(Estimate { raw, inflated })
}

/// Estimated constants, inflated and derived.
pub fn estimate_derived(model: &ManifoldModel, spec: &EstimateSpec) -> Result<GeometryConstants, ConstantsError> {
    let mut c = GeometryConstants::derive(estimate(model, spec)?.inflated)?;
    c.estimated = true;
    Ok(c)
}

fn interior_sample(radius: f64, n: usize) -> Vec<Vec2> {
    // Sunflower pattern: deterministic and roughly uniform in area.
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let r = radius * 0.97 * ((i as f64 + 0.5) / n as f64).sqrt();
            Vec2::from_polar(r, i as f64 * golden)
        })
        .collect()
}

/// Along the geodesic from `p` with heading `a` until it leaves the disk:
/// `sup t j'/j` and samples `(t, j'/j)` for the Hessian bound.
fn jacobi_extremes(model: &ManifoldModel, p: Vec2, a: f64, step: f64) -> (f64, Vec<(f64, f64)>) {
    let field = model.field();
    let r2 = model.radius() * model.radius();
    let mut s = GeodesicState::start(p, a);
    let mut t = 0.0;
    let mut sup: f64 = 1.0;
    let mut samples = Vec::new();
    let limit = 4.0 * model.scale();
    // The first step is taken inside the disk even from a boundary point.
    while t < limit {
        let next = geodesic::rk4_step(field, &s, step, true);
        if next.position.norm_squared() > r2 && t > 0.0 {
            break;
        }
        s = next;
        t += step;
        if t < 4.0 * step || s.jacobi <= 0.0 {
            continue;
        }
        let ratio = s.jacobi_rate / s.jacobi;
        sup = sup.max(t * ratio);
        samples.push((t, ratio));
    }
    (sup, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_fundamentals() -> FundamentalConstants {
        FundamentalConstants::analytic(&ManifoldModel::euclidean_disk(1.0).unwrap()).unwrap()
    }

    #[test]
    fn derived_values_for_unit_disk() {
        let c = GeometryConstants::derive(unit_fundamentals()).unwrap();
        assert_eq!(c.c_b, 1.0);
        assert_eq!(c.c_d, 1.0);
        assert_eq!(c.c9, 2.0);
        assert_eq!(c.c10, 7.0);
        assert_eq!(c.c12, 8.0);
        assert_eq!(c.c19, 1.0);
        assert!((c.c_a - 2.0 / PI).abs() < 1e-15);
        assert!((c.c_c - 1.0).abs() < 1e-15);
        assert!((c.c11 - 4.0 * (10.0 / PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn derived_identities() {
        let c = GeometryConstants::analytic(&ManifoldModel::curved_disk(-1.0, 0.6).unwrap()).unwrap();
        let eq = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        assert!(eq(c.c9, 2.0 * c.c_d));
        assert!(eq(c.c12, c.c10 + 1.0));
        assert!(eq(1.0 / c.c19, 0.5 * c.c9));
        assert!(eq(c.c10, 2.0 + c.c9 + c.c_g));
        assert!(eq(c.c11, c.c_e * c.c9.sqrt()));
        assert!(eq(c.c_f, 1.0 / c.c_a));
    }

    #[test]
    fn diameter_curvature_bound_is_enforced() {
        let mut f = unit_fundamentals();
        f.c_sec_plus = (PI / f.c_diam).powi(2);
        let err = GeometryConstants::derive(f).unwrap_err();
        assert!(err.to_string().contains("π"), "{err}");
    }

    #[test]
    fn derive_is_deterministic() {
        let f = unit_fundamentals();
        let a = serde_json::to_string(&GeometryConstants::derive(f).unwrap()).unwrap();
        let b = serde_json::to_string(&GeometryConstants::derive(f).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn density_example() {
        let c = GeometryConstants::derive(unit_fundamentals()).unwrap();
        assert!((c.density_epsilon(0.01) - (0.07 + 0.4 * (10.0 / PI).sqrt())).abs() < 1e-12);
        assert!((c.density_epsilon(0.01) - 0.7836).abs() < 1e-3);
        assert_eq!(c.density_epsilon(0.0), 0.0);
        assert!((c.hat_epsilon(0.8) - c.c27 * 0.64).abs() < 1e-18);
    }

    #[test]
    fn estimate_unit_disk_matches_analytic_values() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let e = estimate(&m, &EstimateSpec::default()).unwrap();
        assert!((e.raw.c_diam - 2.0).abs() < 1e-9);
        assert!((e.raw.c_sff - 1.0).abs() < 1e-12);
        assert!((e.raw.c_dist - PI / 2.0).abs() < 1e-9);
        assert!((e.raw.c_exp - 1.0).abs() < 1e-9);
        assert!((e.raw.c_jf - 1.0).abs() < 1e-6);
        assert!(e.raw.c_h2 < 1e-6);
        assert!(e.inflated.c_diam > e.raw.c_diam);
        assert!(e.inflated.c_h1 < e.raw.c_h1);
    }

    #[test]
    fn estimate_hyperbolic_curvature() {
        let m = ManifoldModel::curved_disk(-1.0, 0.5).unwrap();
        let e = estimate(&m, &EstimateSpec::default()).unwrap();
        assert!((e.raw.c_sec_minus - 1.0).abs() < 1e-6);
        assert!((e.raw.c_sec_plus - default_sec_plus_floor(e.raw.c_diam)).abs() < 1e-15);
        let a = FundamentalConstants::analytic(&m).unwrap();
        assert!((e.raw.c_diam - a.c_diam).abs() < 1e-9);
        assert!((e.raw.c_sff - a.c_sff).abs() < 1e-9);
        assert!(e.raw.c_jf <= a.c_jf * 1.01);
        GeometryConstants::derive(e.inflated).unwrap();
    }

    #[test]
    fn estimate_scales_with_the_model() {
        let s = EstimateSpec::default();
        let a = estimate(&ManifoldModel::euclidean_disk(1.0).unwrap(), &s).unwrap().raw;
        let b = estimate(&ManifoldModel::euclidean_disk(2.0).unwrap(), &s).unwrap().raw;
        assert!((b.c_diam - 2.0 * a.c_diam).abs() < 1e-9);
        assert!((b.c_sff - 0.5 * a.c_sff).abs() < 1e-12);
    }

    #[test]
    fn estimate_rejects_tiny_samples() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let spec = EstimateSpec { points: 4, ..Default::default() };
        assert!(matches!(estimate(&m, &spec), Err(ConstantsError::SampleTooSmall { .. })));
    }

    #[test]
    fn flat_json_round_trip() {
        let c = GeometryConstants::derive(unit_fundamentals()).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"C_diam\":2.0") && s.contains("\"C_9\":2.0"));
        let back: GeometryConstants = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
