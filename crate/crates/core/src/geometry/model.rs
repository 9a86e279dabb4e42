use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::field::{ConformalField, GridSpec};
use super::geodesic::{self, GeodesicState};
use super::{GeometryError, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigKind {
    EuclideanDisk,
    CurvedDisk,
    ConformalDisk,
}

/// Conformal factor source: exactly one of the two fields is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct ConformalSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

/// The JSON manifold document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldConfig {
    pub kind: ConfigKind,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal: Option<ConformalSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    EuclideanDisk,
    CurvedDisk { kappa: f64 },
    ConformalDisk,
}

#[derive(Clone, Debug)]
enum BoundaryParam {
    /// `ds/dφ` is constant.
    Uniform { speed: f64 },
    /// Cumulative arclength tabulated on a uniform angle grid, Hermite-interpolated.
    Table { step: f64, s: Vec<f64>, ds: Vec<f64> },
}

/// A simple disk `{|x| ≤ R}` with metric `c(x)^{-2} δ`.
#[derive(Clone, Debug)]
pub struct ManifoldModel {
    config: ManifoldConfig,
    kind: ModelKind,
    radius: f64,
    field: ConformalField,
    boundary: BoundaryParam,
    boundary_length: f64,
    scale: f64,
    tol_dist: f64,
    ode_step: f64,
}

const MIN_CONFORMAL: f64 = 1e-3;
const TABLE_SIZE: usize = 4096;

impl ManifoldModel {
    pub fn euclidean_disk(radius: f64) -> Result<Self, GeometryError> {
        Self::from_config(ManifoldConfig {
            kind: ConfigKind::EuclideanDisk,
            radius,
            kappa: None,
            conformal: None,
        })
    }

    /// Disk of constant curvature `kappa` in the stereographic chart.
    pub fn curved_disk(kappa: f64, radius: f64) -> Result<Self, GeometryError> {
        Self::from_config(ManifoldConfig {
            kind: ConfigKind::CurvedDisk,
            radius,
            kappa: Some(kappa),
            conformal: None,
        })
    }

    pub fn conformal_disk(expression: &str, radius: f64) -> Result<Self, GeometryError> {
        Self::from_config(ManifoldConfig {
            kind: ConfigKind::ConformalDisk,
            radius,
            kappa: None,
            conformal: Some(ConformalSpec {
                expression: Some(expression.to_string()),
                grid: None,
            }),
        })
    }

    pub fn from_config(config: ManifoldConfig) -> Result<Self, GeometryError> {
        let radius = config.radius;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidModel(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        let (kind, field) = match config.kind {
            ConfigKind::EuclideanDisk => (ModelKind::EuclideanDisk, ConformalField::Unit),
            ConfigKind::CurvedDisk => {
                let kappa = config.kappa.ok_or_else(|| {
                    GeometryError::InvalidModel("curved-disk requires `kappa`".into())
                })?;
                if !kappa.is_finite() || kappa == 0.0 {
                    return Err(GeometryError::InvalidModel(format!(
                        "kappa must be finite and nonzero, got {kappa}"
                    )));
                }
                if kappa * radius * radius <= -1.0 {
                    return Err(GeometryError::InvalidModel(format!(
                        "radius {radius} reaches the ideal boundary for kappa {kappa}; need radius < {}",
                        1.0 / (-kappa).sqrt()
                    )));
                }
                if kappa * radius * radius >= 1.0 {
                    return Err(GeometryError::InvalidModel(format!(
                        "spherical cap of radius {radius} with kappa {kappa} is not strictly convex; need kappa·radius² < 1"
                    )));
                }
                (
                    ModelKind::CurvedDisk { kappa },
                    ConformalField::ConstantCurvature { kappa },
                )
            }
            ConfigKind::ConformalDisk => {
                let spec = config.conformal.as_ref().ok_or_else(|| {
                    GeometryError::InvalidModel("conformal-disk requires `conformal`".into())
                })?;
                let field = match (&spec.expression, &spec.grid) {
                    (Some(e), None) => ConformalField::expression(e)?,
                    (None, Some(g)) => {
                        if g.extent < radius {
                            return Err(GeometryError::InvalidModel(format!(
                                "conformal grid extent {} does not cover radius {radius}",
                                g.extent
                            )));
                        }
                        ConformalField::grid(g.clone())?
                    }
                    _ => {
                        return Err(GeometryError::InvalidModel(
                            "conformal needs exactly one of `expression` or `grid`".into(),
                        ))
                    }
                };
                (ModelKind::ConformalDisk, field)
            }
        };
        if kind == ModelKind::ConformalDisk {
            check_field_bounds(&field, radius)?;
        }
        let boundary = build_boundary(&field, radius);
        let boundary_length = match &boundary {
            BoundaryParam::Uniform { speed } => speed * std::f64::consts::TAU,
            BoundaryParam::Table { s, .. } => *s.last().unwrap(),
        };
        let scale = diameter_scale(kind, &field, radius);
        let mut model = ManifoldModel {
            config,
            kind,
            radius,
            field,
            boundary,
            boundary_length,
            scale,
            tol_dist: 1e-7 * scale,
            ode_step: scale / 512.0,
        };
        model.check_convexity()?;
        model.tol_dist = 1e-7 * model.scale;
        Ok(model)
    }

    pub fn config(&self) -> &ManifoldConfig {
        &self.config
    }

    /// Hex SHA-256 of the canonical JSON configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.config).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn field(&self) -> &ConformalField {
        &self.field
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_length
    }

    /// Upper bound for the diameter, used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tol_dist(&self) -> f64 {
        self.tol_dist
    }

    pub fn with_tol_dist(mut self, tol: f64) -> Self {
        self.tol_dist = tol;
        self
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self.kind, ModelKind::ConformalDisk)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.norm() <= self.radius * (1.0 + 1e-12)
    }

    pub fn conformal(&self, p: Vec2) -> f64 {
        self.field.value(p)
    }

    /// Riemannian length of the coordinate vector `v` at `p`.
    pub fn metric_norm(&self, p: Vec2, v: Vec2) -> f64 {
        v.norm() / self.field.value(p)
    }

    /// Riemannian volume density `c^{-2}` with respect to coordinate area.
    pub fn volume_density(&self, p: Vec2) -> f64 {
        let c = self.field.value(p);
        1.0 / (c * c)
    }

    pub fn gauss_curvature(&self, p: Vec2) -> f64 {
        self.field.gauss_curvature(p)
    }

    pub fn total_volume(&self) -> f64 {
        let r = self.radius;
        match self.kind {
            ModelKind::EuclideanDisk => std::f64::consts::PI * r * r,
            ModelKind::CurvedDisk { kappa } => 4.0 * std::f64::consts::PI * r * r / (1.0 + kappa * r * r),
            ModelKind::ConformalDisk => {
                let (nr, na) = (256usize, 512usize);
                let dr = r / nr as f64;
                let da = std::f64::consts::TAU / na as f64;
                let mut sum = 0.0;
                for i in 0..nr {
                    let rho = (i as f64 + 0.5) * dr;
                    for k in 0..na {
                        let p = Vec2::from_polar(rho, (k as f64 + 0.5) * da);
                        sum += self.volume_density(p) * rho;
                    }
                }
                sum * dr * da
            }
        }
    }

    fn check_point(&self, p: Vec2) -> Result<(), GeometryError> {
        if self.contains(p) && p.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::OutsideDisk(p))
        }
    }

    pub fn distance(&self, p: Vec2, q: Vec2) -> Result<f64, GeometryError> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(match self.kind {
            ModelKind::EuclideanDisk => p.distance(q),
            ModelKind::CurvedDisk { kappa } => curved_distance(kappa, p, q),
            ModelKind::ConformalDisk => {
                if p == q {
                    0.0
                } else {
                    self.shoot(p, q)?.1
                }
            }
        })
    }

    /// Coordinate tangent vector at `p` whose exponential is `q`.
    pub fn log_map(&self, p: Vec2, q: Vec2) -> Result<Vec2, GeometryError> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(match self.kind {
            ModelKind::EuclideanDisk => q - p,
            ModelKind::CurvedDisk { kappa } => curved_log(kappa, p, q),
            ModelKind::ConformalDisk => {
                if p == q {
                    Vec2::ZERO
                } else {
                    let (heading, t) = self.shoot(p, q)?;
                    Vec2::from_polar(self.field.value(p) * t, heading)
                }
            }
        })
    }

    pub fn exp_map(&self, p: Vec2, v: Vec2) -> Result<Vec2, GeometryError> {
        self.check_point(p)?;
        let q = match self.kind {
            ModelKind::EuclideanDisk => p + v,
            ModelKind::CurvedDisk { kappa } => curved_exp(kappa, p, v)?,
            ModelKind::ConformalDisk => {
                let t = self.metric_norm(p, v);
                let limit = self.radius * (1.0 + 1e-9);
                let (s, _, ok) = geodesic::integrate(
                    &self.field,
                    GeodesicState::start(p, v.angle()),
                    t,
                    self.ode_step,
                    false,
                    |s| s.position.norm() <= limit,
                );
                if !ok {
                    return Err(GeometryError::LeftDisk(t));
                }
                s.position
            }
        };
        if !self.contains(q) {
            return Err(GeometryError::LeftDisk(self.metric_norm(p, v)));
        }
        Ok(q)
    }

    /// Point at fraction `t ∈ [0, 1]` along the geodesic from `p` to `q`.
    pub fn geodesic_point(&self, p: Vec2, q: Vec2, t: f64) -> Result<Vec2, GeometryError> {
        let v = self.log_map(p, q)?;
        self.exp_map(p, v * t)
    }

    /// Distance in the complete constant-curvature surface that contains the
    /// disk; equal to `distance` for conformal models.
    pub fn ambient_distance(&self, p: Vec2, q: Vec2) -> Result<f64, GeometryError> {
        match self.kind {
            ModelKind::EuclideanDisk => Ok(p.distance(q)),
            ModelKind::CurvedDisk { kappa } => {
                self.check_ambient(p)?;
                self.check_ambient(q)?;
                Ok(curved_distance(kappa, p, q))
            }
            ModelKind::ConformalDisk => self.distance(p, q),
        }
    }

    pub fn ambient_exp(&self, p: Vec2, v: Vec2) -> Result<Vec2, GeometryError> {
        match self.kind {
            ModelKind::EuclideanDisk => Ok(p + v),
            ModelKind::CurvedDisk { kappa } => {
                self.check_ambient(p)?;
                let q = curved_exp(kappa, p, v)?;
                self.check_ambient(q)?;
                Ok(q)
            }
            ModelKind::ConformalDisk => self.exp_map(p, v),
        }
    }

    pub fn ambient_log(&self, p: Vec2, q: Vec2) -> Result<Vec2, GeometryError> {
        match self.kind {
            ModelKind::EuclideanDisk => Ok(q - p),
            ModelKind::CurvedDisk { kappa } => {
                self.check_ambient(p)?;
                self.check_ambient(q)?;
                Ok(curved_log(kappa, p, q))
            }
            ModelKind::ConformalDisk => self.log_map(p, q),
        }
    }

    fn check_ambient(&self, p: Vec2) -> Result<(), GeometryError> {
        let ok = match self.kind {
            ModelKind::CurvedDisk { kappa } if kappa < 0.0 => p.norm_squared() * -kappa < 1.0 - 1e-9,
            _ => true,
        };
        if ok && p.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::OutsideDisk(p))
        }
    }

    /// Initial heading and length of the geodesic from `p` to `q`, by Newton
    /// shooting on `(heading, length)` with the Jacobi field as the
    /// sensitivity to the heading.
    pub fn shoot(&self, p: Vec2, q: Vec2) -> Result<(f64, f64), GeometryError> {
        let base = (q - p).angle();
        let c_avg = 0.5 * (self.field.value(p) + self.field.value(q));
        let t0 = p.distance(q) / c_avg;
        let mut best = f64::INFINITY;
        for offset in [0.0, 0.25, -0.25, 0.6, -0.6] {
            match self.newton_shoot(p, q, base + offset, t0) {
                Ok(sol) => return Ok(sol),
                Err(r) => best = best.min(r),
            }
        }
        Err(GeometryError::NoConvergence {
            from: p,
            to: q,
            residual: best,
        })
    }

    fn newton_shoot(&self, p: Vec2, q: Vec2, heading0: f64, t0: f64) -> Result<(f64, f64), f64> {
        let mut heading = heading0;
        let mut t = t0;
        let mut residual = f64::INFINITY;
        for _ in 0..40 {
            let (s, _, _) = geodesic::integrate(
                &self.field,
                GeodesicState::start(p, heading),
                t,
                self.ode_step,
                true,
                |_| true,
            );
            let c = self.field.value(s.position);
            let miss = s.position - q;
            residual = miss.norm() / c;
            if residual <= self.tol_dist {
                return Ok((heading, t));
            }
            if s.jacobi <= 0.0 {
                return Err(residual);
            }
            let tangent = Vec2::from_polar(1.0, s.heading);
            let normal = tangent.perp();
            let d_heading = (-miss.dot(normal) / (s.jacobi * c)).clamp(-0.5, 0.5);
            let d_t = -miss.dot(tangent) / c;
            heading += d_heading;
            t = (t + d_t).max(0.5 * t);
        }
        Err(residual)
    }

    // ---- boundary --------------------------------------------------------

    /// Polar angle of the boundary point at arclength `s` (wrapped).
    pub fn boundary_angle(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.boundary_length);
        match &self.boundary {
            BoundaryParam::Uniform { speed } => s / speed,
            BoundaryParam::Table { step, s: tab, ds } => {
                let k = match tab.binary_search_by(|v| v.total_cmp(&s)) {
                    Ok(k) => return k as f64 * step,
                    Err(k) => k.saturating_sub(1).min(tab.len() - 2),
                };
                let mut u = (s - tab[k]) / (tab[k + 1] - tab[k]);
                for _ in 0..8 {
                    let (val, der) = hermite(tab[k], tab[k + 1], ds[k] * step, ds[k + 1] * step, u);
                    if der <= 0.0 {
                        break;
                    }
                    u = (u - (val - s) / der).clamp(0.0, 1.0);
                }
                (k as f64 + u) * step
            }
        }
    }

    /// Arclength from angle 0 to polar angle `phi` (counter-clockwise).
    pub fn boundary_arclength(&self, phi: f64) -> f64 {
        let phi = phi.rem_euclid(std::f64::consts::TAU);
        match &self.boundary {
            BoundaryParam::Uniform { speed } => phi * speed,
            BoundaryParam::Table { step, s, ds } => {
                let x = phi / step;
                let k = (x.floor() as usize).min(s.len() - 2);
                hermite(s[k], s[k + 1], ds[k] * step, ds[k + 1] * step, x - k as f64).0
            }
        }
    }

    pub fn boundary_point(&self, s: f64) -> Vec2 {
        Vec2::from_polar(self.radius, self.boundary_angle(s))
    }

    /// Geodesic curvature of `∂M` with respect to the inward normal,
    /// `k = c/R − ∂_r c`, which is the ratio `h₂/h₁` in two dimensions.
    pub fn second_fundamental_form(&self, s: f64) -> f64 {
        let x = self.boundary_point(s);
        let jet = self.field.jet(x);
        jet.value / self.radius - jet.gradient.dot(x) / self.radius
    }

    /// The same curvature measured by how fast the geodesic tangent to `∂M`
    /// at `s` leaves the disk, with one Richardson step.
    pub fn second_fundamental_form_numeric(&self, s: f64) -> f64 {
        let x = self.boundary_point(s);
        let heading = x.angle() + std::f64::consts::FRAC_PI_2;
        let gap = |t: f64| {
            let (st, _, _) = geodesic::integrate(
                &self.field,
                GeodesicState::start(x, heading),
                t,
                t / 64.0,
                false,
                |_| true,
            );
            let p = st.position;
            let mid = Vec2::from_polar(0.5 * (p.norm() + self.radius), p.angle());
            2.0 * (p.norm() - self.radius) / self.field.value(mid) / (t * t)
        };
        let t = 0.01 * self.scale;
        2.0 * gap(0.5 * t) - gap(t)
    }

    /// Distance from `p` to `∂M` and the nearest boundary point.
    pub fn distance_to_boundary(&self, p: Vec2) -> Result<(f64, Vec2), GeometryError> {
        self.check_point(p)?;
        let dir = if p.norm() > 0.0 { p.angle() } else { 0.0 };
        let foot = Vec2::from_polar(self.radius, dir);
        match self.kind {
            ModelKind::EuclideanDisk => Ok((self.radius - p.norm(), foot)),
            ModelKind::CurvedDisk { kappa } => {
                Ok((radial_distance(kappa, self.radius) - radial_distance(kappa, p.norm()), foot))
            }
            ModelKind::ConformalDisk => {
                let exit = |a: f64| {
                    geodesic::ray_exit(
                        &self.field,
                        GeodesicState::start(p, a),
                        self.radius,
                        self.ode_step,
                        4.0 * self.scale,
                        false,
                    )
                };
                let fans = 64;
                let da = std::f64::consts::TAU / fans as f64;
                let mut best = (f64::INFINITY, 0.0);
                for k in 0..fans {
                    let a = k as f64 * da;
                    if let Some((t, _)) = exit(a) {
                        if t < best.0 {
                            best = (t, a);
                        }
                    }
                }
                if !best.0.is_finite() {
                    return Err(GeometryError::LeftDisk(4.0 * self.scale));
                }
                let time = |a: f64| exit(a).map(|(t, _)| t).unwrap_or(f64::INFINITY);
                let (mut lo, mut hi) = (best.1 - da, best.1 + da);
                let g = 0.5 * (5f64.sqrt() - 1.0);
                let mut a1 = hi - g * (hi - lo);
                let mut a2 = lo + g * (hi - lo);
                let (mut f1, mut f2) = (time(a1), time(a2));
                for _ in 0..40 {
                    if f1 < f2 {
                        hi = a2;
                        a2 = a1;
                        f2 = f1;
                        a1 = hi - g * (hi - lo);
                        f1 = time(a1);
                    } else {
                        lo = a1;
                        a1 = a2;
                        f1 = f2;
                        a2 = lo + g * (hi - lo);
                        f2 = time(a2);
                    }
                }
                let a = 0.5 * (lo + hi);
                let (t, s) = exit(a).ok_or(GeometryError::LeftDisk(4.0 * self.scale))?;
                Ok((t, s.position))
            }
        }
    }

    /// Numerical simplicity proxy: from each of `bases` boundary points, the
    /// exit point of rays swept across the inward half-plane must move
    /// monotonically around the circle (no fold of the shooting map).
    pub fn verify_simple(&self, bases: usize, rays: usize) -> Result<(), GeometryError> {
        for b in 0..bases {
            let s = b as f64 * self.boundary_length / bases as f64;
            let x = self.boundary_point(s);
            let inward = (-x).angle();
            let mut prev: Option<f64> = None;
            for k in 1..rays {
                let a = inward - std::f64::consts::FRAC_PI_2
                    + std::f64::consts::PI * k as f64 / rays as f64;
                let start = GeodesicState::start(x, a);
                let nudged = geodesic::rk4_step(&self.field, &start, 1e-6 * self.scale, false);
                let exit = geodesic::ray_exit(&self.field, nudged, self.radius, self.ode_step, 4.0 * self.scale, false)
                    .ok_or_else(|| GeometryError::InvalidModel("trapped geodesic".into()))?;
                let rel = (exit.1.position.angle() - x.angle()).rem_euclid(std::f64::consts::TAU);
                if let Some(p) = prev {
                    if rel <= p {
                        return Err(GeometryError::InvalidModel(format!(
                            "shooting map folds at boundary parameter {s:.4}; model is not simple"
                        )));
                    }
                }
                prev = Some(rel);
            }
        }
        Ok(())
    }

    fn check_convexity(&self) -> Result<(), GeometryError> {
        let n = 256;
        for k in 0..n {
            let s = k as f64 * self.boundary_length / n as f64;
            let kg = self.second_fundamental_form(s);
            if !(kg > 0.0) {
                return Err(GeometryError::InvalidModel(format!(
                    "boundary is not strictly convex at arclength {s:.4} (curvature {kg:.4})"
                )));
            }
        }
        Ok(())
    }
}

fn check_field_bounds(field: &ConformalField, radius: f64) -> Result<(), GeometryError> {
    let n = 48;
    for i in 0..=n {
        for j in 0..=n {
            let p = Vec2::new(
                -radius + 2.0 * radius * i as f64 / n as f64,
                -radius + 2.0 * radius * j as f64 / n as f64,
            );
            if p.norm() > radius {
                continue;
            }
            let jet = field.jet(p);
            if !(jet.value.is_finite() && jet.gradient.is_finite()) || jet.value < MIN_CONFORMAL {
                return Err(GeometryError::InvalidModel(format!(
                    "conformal factor must be finite and at least {MIN_CONFORMAL}; got {} at ({:.3}, {:.3})",
                    jet.value, p.x, p.y
                )));
            }
        }
    }
    Ok(())
}

fn build_boundary(field: &ConformalField, radius: f64) -> BoundaryParam {
    if field.is_radial() {
        let c = field.value(Vec2::new(radius, 0.0));
        return BoundaryParam::Uniform { speed: radius / c };
    }
    let step = std::f64::consts::TAU / TABLE_SIZE as f64;
    let speed = |phi: f64| radius / field.value(Vec2::from_polar(radius, phi));
    let mut s = Vec::with_capacity(TABLE_SIZE + 1);
    let mut ds = Vec::with_capacity(TABLE_SIZE + 1);
    s.push(0.0);
    for k in 0..TABLE_SIZE {
        let a = k as f64 * step;
        ds.push(speed(a));
        let inc = step / 6.0 * (speed(a) + 4.0 * speed(a + 0.5 * step) + speed(a + step));
        s.push(s[k] + inc);
    }
    ds.push(ds[0]);
    BoundaryParam::Table { step, s, ds }
}

fn hermite(p0: f64, p1: f64, m0: f64, m1: f64, u: f64) -> (f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    let v = (2.0 * u3 - 3.0 * u2 + 1.0) * p0
        + (u3 - 2.0 * u2 + u) * m0
        + (-2.0 * u3 + 3.0 * u2) * p1
        + (u3 - u2) * m1;
    let d = (6.0 * u2 - 6.0 * u) * p0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (-6.0 * u2 + 6.0 * u) * p1
        + (3.0 * u2 - 2.0 * u) * m1;
    (v, d)
}

fn diameter_scale(kind: ModelKind, field: &ConformalField, radius: f64) -> f64 {
    match kind {
        ModelKind::EuclideanDisk => 2.0 * radius,
        ModelKind::CurvedDisk { kappa } => 2.0 * radial_distance(kappa, radius),
        ModelKind::ConformalDisk => {
            let mut best: f64 = 0.0;
            for k in 0..32 {
                let dir = Vec2::from_polar(1.0, k as f64 * std::f64::consts::TAU / 32.0);
                let n = 200;
                let h = radius / n as f64;
                let len: f64 = (0..n)
                    .map(|i| h / field.value(dir * ((i as f64 + 0.5) * h)))
                    .sum();
                best = best.max(len);
            }
            2.0 * best
        }
    }
}

/// Distance from the chart origin to a point at coordinate radius `r`.
pub fn radial_distance(kappa: f64, r: f64) -> f64 {
    let k = kappa.abs().sqrt();
    if kappa < 0.0 {
        2.0 / k * (k * r).atanh()
    } else {
        2.0 / k * (k * r).atan()
    }
}

#[inline]
fn cmul(a: Vec2, b: Vec2) -> Vec2 {
    Vec2::new(a.x * b.x - a.y * b.y, a.x * b.y + a.y * b.x)
}

#[inline]
fn conj(a: Vec2) -> Vec2 {
    Vec2::new(a.x, -a.y)
}

#[inline]
fn cdiv(a: Vec2, b: Vec2) -> Vec2 {
    let d = b.norm_squared();
    Vec2::new((a.x * b.x + a.y * b.y) / d, (a.y * b.x - a.x * b.y) / d)
}

/// Möbius map sending `a` to the origin, isometric for curvature sign `s`.
fn mobius(s: f64, a: Vec2, z: Vec2) -> Vec2 {
    cdiv(z - a, Vec2::new(1.0, 0.0) + cmul(conj(a), z) * s)
}

fn mobius_inv(s: f64, a: Vec2, w: Vec2) -> Vec2 {
    cdiv(w + a, Vec2::new(1.0, 0.0) - cmul(conj(a), w) * s)
}

fn curved_distance(kappa: f64, p: Vec2, q: Vec2) -> f64 {
    let k = kappa.abs().sqrt();
    let s = kappa.signum();
    let (u, v) = (p * k, q * k);
    let num = (u - v).norm();
    let den = (Vec2::new(1.0, 0.0) + cmul(conj(u), v) * s).norm();
    let ratio = num / den;
    if kappa < 0.0 {
        2.0 * ratio.atanh() / k
    } else {
        2.0 * ratio.atan() / k
    }
}

fn curved_log(kappa: f64, p: Vec2, q: Vec2) -> Vec2 {
    let k = kappa.abs().sqrt();
    let s = kappa.signum();
    let a = p * k;
    let w = mobius(s, a, q * k);
    let r = w.norm();
    if r == 0.0 {
        return Vec2::ZERO;
    }
    let du = if kappa < 0.0 { 2.0 * r.atanh() } else { 2.0 * r.atan() };
    let v0 = w * (0.5 * du / r);
    v0 * ((1.0 + s * a.norm_squared()) / k)
}

fn curved_exp(kappa: f64, p: Vec2, v: Vec2) -> Result<Vec2, GeometryError> {
    let k = kappa.abs().sqrt();
    let s = kappa.signum();
    let a = p * k;
    let va = v * k;
    let n = va.norm();
    if n == 0.0 {
        return Ok(p);
    }
    let du = n / (0.5 * (1.0 + s * a.norm_squared()));
    let r = if kappa < 0.0 {
        (0.5 * du).tanh()
    } else {
        if 0.5 * du >= std::f64::consts::FRAC_PI_2 {
            return Err(GeometryError::LeftDisk(du / k));
        }
        (0.5 * du).tan()
    };
    Ok(mobius_inv(s, a, va * (r / n)) * (1.0 / k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_distance_examples() {
        let e = ManifoldModel::euclidean_disk(1.0).unwrap();
        assert!((e.distance(Vec2::new(0.3, 0.0), Vec2::new(-0.4, 0.0)).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(e.distance(Vec2::new(0.1, 0.2), Vec2::new(0.1, 0.2)).unwrap(), 0.0);
        let h = ManifoldModel::curved_disk(-1.0, 0.9).unwrap();
        let d = h.distance(Vec2::ZERO, Vec2::new(0.5, 0.0)).unwrap();
        assert!((d - 2.0 * 0.5f64.atanh()).abs() < 1e-14);
        assert!((d - 1.09861).abs() < 1e-5);
    }

    #[test]
    fn hyperbolic_log_has_expected_direction_and_norm() {
        let h = ManifoldModel::curved_disk(-1.0, 0.9).unwrap();
        let v = h.log_map(Vec2::ZERO, Vec2::new(0.5, 0.0)).unwrap();
        assert!(v.y.abs() < 1e-15 && v.x > 0.0);
        assert!((h.metric_norm(Vec2::ZERO, v) - 2.0 * 0.5f64.atanh()).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_agree_with_shooting() {
        for kappa in [-1.0, -0.5, 0.8] {
            let closed = ManifoldModel::curved_disk(kappa, 0.7).unwrap();
            let expr = format!("(1 + ({kappa})*(x^2 + y^2))/2");
            let shot = ManifoldModel::conformal_disk(&expr, 0.7).unwrap();
            let pairs = [
                (Vec2::new(0.1, 0.2), Vec2::new(-0.4, 0.3)),
                (Vec2::new(0.6, 0.0), Vec2::new(-0.2, -0.5)),
                (Vec2::new(0.0, -0.7), Vec2::new(0.0, 0.7)),
            ];
            for (p, q) in pairs {
                let a = closed.distance(p, q).unwrap();
                let b = shot.distance(p, q).unwrap();
                assert!((a - b).abs() < 1e-6, "kappa {kappa}: {a} vs {b}");
                let la = closed.log_map(p, q).unwrap();
                let lb = shot.log_map(p, q).unwrap();
                assert!(la.distance(lb) < 1e-6, "{la:?} vs {lb:?}");
            }
        }
    }

    #[test]
    fn exp_log_round_trip_on_curved_disks() {
        for kappa in [-1.0, 0.5] {
            let m = ManifoldModel::curved_disk(kappa, 0.8).unwrap();
            let p = Vec2::new(0.2, -0.3);
            for k in 0..12 {
                let v = Vec2::from_polar(0.25, k as f64 * 0.5);
                let q = m.exp_map(p, v).unwrap();
                let back = m.log_map(p, q).unwrap();
                assert!(back.distance(v) < 1e-12, "{back:?} {v:?}");
            }
        }
    }

    #[test]
    fn boundary_curvature_formula_matches_tangent_geodesic_measurement() {
        let m = ManifoldModel::conformal_disk("1 + 0.2*x + 0.1*y^2", 1.0).unwrap();
        for k in 0..8 {
            let s = k as f64 * m.boundary_length() / 8.0;
            let a = m.second_fundamental_form(s);
            let b = m.second_fundamental_form_numeric(s);
            assert!((a - b).abs() < 2e-3 * a.abs().max(1.0), "s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn sff_of_euclidean_and_hyperbolic_disks() {
        let e = ManifoldModel::euclidean_disk(2.0).unwrap();
        assert!((e.second_fundamental_form(0.3) - 0.5).abs() < 1e-15);
        let h = ManifoldModel::curved_disk(-1.0, 0.5).unwrap();
        let rho = radial_distance(-1.0, 0.5);
        assert!((h.second_fundamental_form(1.0) - 1.0 / rho.tanh()).abs() < 1e-12);
    }

    #[test]
    fn non_radial_boundary_parametrization_inverts() {
        let m = ManifoldModel::conformal_disk("1 + 0.3*x", 1.0).unwrap();
        for k in 0..50 {
            let phi = k as f64 * 0.12;
            let s = m.boundary_arclength(phi);
            assert!((m.boundary_angle(s) - phi).abs() < 1e-9);
        }
        let exact: f64 = {
            // ∫ dφ / (1 + 0.3 cos φ) = 2π / √(1 − 0.09)
            std::f64::consts::TAU / (1.0 - 0.09f64).sqrt()
        };
        assert!((m.boundary_length() - exact).abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid_models() {
        assert!(ManifoldModel::euclidean_disk(-1.0).is_err());
        assert!(ManifoldModel::curved_disk(-1.0, 1.0).is_err());
        assert!(ManifoldModel::curved_disk(1.0, 1.0).is_err());
        assert!(ManifoldModel::conformal_disk("x", 1.0).is_err());
    }

    #[test]
    fn conformal_distance_to_boundary_matches_radial_case() {
        let m = ManifoldModel::conformal_disk("(1 - 0.5*(x^2+y^2))/2", 1.0).unwrap();
        let c = ManifoldModel::curved_disk(-0.5, 1.0).unwrap();
        let p = Vec2::new(0.3, 0.2);
        let (a, fa) = m.distance_to_boundary(p).unwrap();
        let (b, fb) = c.distance_to_boundary(p).unwrap();
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        assert!(fa.distance(fb) < 1e-4);
    }

    #[test]
    fn simple_models_pass_the_fold_check() {
        ManifoldModel::conformal_disk("1 + 0.1*x*y", 1.0)
            .unwrap()
            .verify_simple(6, 24)
            .unwrap();
    }
}
