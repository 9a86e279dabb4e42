//! Uniform arclength grids on `∂M` and sampled boundary functions.

use serde::{Deserialize, Serialize};

use super::{GeometryError, ManifoldModel, Vec2};
use crate::par;

/// `n` nodes equally spaced in arclength around a boundary of length `length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    pub n: usize,
    pub length: f64,
}

impl BoundaryGrid {
    pub fn new(n: usize, length: f64) -> Self {
        assert!(n >= 8, "boundary grid needs at least 8 nodes");
        BoundaryGrid { n, length }
    }

    pub fn for_model(model: &ManifoldModel, n: usize) -> Self {
        Self::new(n, model.boundary_length())
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn param(&self, node: usize) -> f64 {
        node as f64 * self.spacing()
    }

    /// Nearest node to an arclength parameter and the signed offset in nodes.
    pub fn locate(&self, s: f64) -> BoundaryLocation {
        let x = s.rem_euclid(self.length) / self.spacing();
        let node = x.round();
        BoundaryLocation {
            node: (node as usize) % self.n,
            offset: x - node,
        }
    }

    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    pub fn points(&self, model: &ManifoldModel) -> Vec<BoundaryPoint> {
        (0..self.n)
            .map(|i| {
                let s = self.param(i);
                BoundaryPoint {
                    arclength_param: s,
                    position: model.boundary_point(s),
                }
            })
            .collect()
    }

    pub fn positions(&self, model: &ManifoldModel) -> Vec<Vec2> {
        (0..self.n).map(|i| model.boundary_point(self.param(i))).collect()
    }

    /// Boundary distance between two locations along the shorter arc.
    pub fn arc_distance(&self, a: BoundaryLocation, b: BoundaryLocation) -> f64 {
        // The node difference is reduced exactly in integers so the result
        // depends only on relative positions.
        let n = self.n as f64;
        let k = (a.node % self.n + self.n - b.node % self.n) % self.n;
        let mut d = k as f64 + (a.offset - b.offset);
        if d < 0.0 {
            d += n;
        } else if d >= n {
            d -= n;
        }
        d.min(n - d) * self.spacing()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub arclength_param: f64,
    pub position: Vec2,
}

/// A boundary parameter as `node + offset` grid units, `offset ∈ [-½, ½]`.
///
/// Keeping the node index exact makes results invariant under rotations of
/// the data by whole grid steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLocation {
    pub node: usize,
    pub offset: f64,
}

impl BoundaryLocation {
    pub fn at_node(node: usize) -> Self {
        BoundaryLocation { node, offset: 0.0 }
    }

    pub fn param(&self, grid: &BoundaryGrid) -> f64 {
        ((self.node as f64 + self.offset) * grid.spacing()).rem_euclid(grid.length)
    }

    pub fn shifted(&self, nodes: usize, n: usize) -> Self {
        BoundaryLocation {
            node: (self.node + nodes) % n,
            offset: self.offset,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Minimum,
    Maximum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: BoundaryLocation,
    pub value: f64,
    pub kind: CriticalKind,
}

/// `r_p(x) = d(x, p)` at every grid node.
pub fn boundary_distance_function(
    model: &ManifoldModel,
    p: Vec2,
    grid: &BoundaryGrid,
) -> Result<Vec<f64>, GeometryError> {
    if model.has_closed_form() {
        (0..grid.n)
            .map(|i| model.distance(model.boundary_point(grid.param(i)), p))
            .collect()
    } else {
        par::try_map_range(grid.n, |i| model.distance(model.boundary_point(grid.param(i)), p))
    }
}

/// Central second differences with stencil half-width `m` nodes.
pub fn hessian_at_nodes(f: &[f64], spacing: f64, m: usize) -> Vec<f64> {
    let n = f.len();
    let h = m as f64 * spacing;
    let inv = 1.0 / (h * h);
    (0..n)
        .map(|i| (f[(i + m) % n] - 2.0 * f[i] + f[(i + n - m) % n]) * inv)
        .collect()
}

/// Second arclength derivative of a sampled circuit at a fractional location,
/// linearly interpolated between the neighbouring node stencils.
pub fn boundary_hessian(
    f: &[f64],
    spacing: f64,
    at: BoundaryLocation,
    m: usize,
) -> Result<f64, GeometryError> {
    let n = f.len();
    if m == 0 || 4 * m >= n {
        return Err(GeometryError::Stencil(format!(
            "stencil half-width {m} nodes does not fit a grid of {n} nodes"
        )));
    }
    if at.node >= n {
        return Err(GeometryError::Stencil(format!("node {} outside grid of {n}", at.node)));
    }
    let node_h = |i: usize| {
        let vals = [f[(i + m) % n], f[i], f[(i + n - m) % n]];
        if vals.iter().all(|v| v.is_finite()) {
            let h = m as f64 * spacing;
            Ok((vals[0] - 2.0 * vals[1] + vals[2]) / (h * h))
        } else {
            Err(GeometryError::Stencil(format!("stencil at node {i} leaves the sampled support")))
        }
    };
    let h0 = node_h(at.node)?;
    if at.offset == 0.0 {
        return Ok(h0);
    }
    let other = if at.offset > 0.0 { (at.node + 1) % n } else { (at.node + n - 1) % n };
    let h1 = node_h(other)?;
    let w = at.offset.abs();
    Ok((1.0 - w) * h0 + w * h1)
}

/// Grid-local extrema of a sampled circuit, refined by parabolic interpolation.
pub fn critical_points(f: &[f64]) -> Result<Vec<CriticalPoint>, GeometryError> {
    let n = f.len();
    if n < 3 {
        return Err(GeometryError::Degenerate(format!("only {n} samples")));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::Degenerate("non-finite samples".into()));
    }
    let (lo, hi) = f
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= 1e-13 * hi.abs().max(lo.abs()).max(1.0) {
        return Err(GeometryError::Degenerate(
            "function is constant; every node is critical".into(),
        ));
    }
    let mut out = Vec::new();
    for i in 0..n {
        let left = f[(i + n - 1) % n];
        let right = f[(i + 1) % n];
        let c = f[i];
        let kind = if c < left && c <= right {
            CriticalKind::Minimum
        } else if c > left && c >= right {
            CriticalKind::Maximum
        } else {
            continue;
        };
        let denom = left - 2.0 * c + right;
        let (offset, value) = if denom != 0.0 {
            let off = (0.5 * (left - right) / denom).clamp(-0.5, 0.5);
            (off, c - 0.25 * (left - right) * off)
        } else {
            (0.0, c)
        };
        out.push(CriticalPoint {
            location: BoundaryLocation { node: i, offset },
            value,
            kind,
        });
    }
    if out.len() < 2 {
        return Err(GeometryError::Degenerate(format!(
            "found {} critical point(s); a smooth circuit has at least two",
            out.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn unit_grid(n: usize) -> BoundaryGrid {
        BoundaryGrid::new(n, TAU)
    }

    #[test]
    fn constant_function_has_zero_hessian_and_no_critical_points() {
        let f = vec![2.5; 64];
        assert_eq!(boundary_hessian(&f, 0.1, BoundaryLocation::at_node(3), 2).unwrap(), 0.0);
        assert!(matches!(critical_points(&f), Err(GeometryError::Degenerate(_))));
    }

    #[test]
    fn cosine_second_derivative() {
        let g = unit_grid(1024);
        let f: Vec<f64> = (0..g.n).map(|i| g.param(i).cos()).collect();
        for i in [0, 100, 512, 900] {
            let h = boundary_hessian(&f, g.spacing(), BoundaryLocation::at_node(i), 2).unwrap();
            assert!((h + g.param(i).cos()).abs() < 1e-4);
        }
    }

    #[test]
    fn distance_function_hessian_at_near_point() {
        // r(θ) = √(1 + ρ² − 2ρ cos θ) has r''(0) = ρ/(1 − ρ) for ρ = 0.9.
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 4096);
        let f = boundary_distance_function(&m, Vec2::new(0.9, 0.0), &g).unwrap();
        let h = boundary_hessian(&f, g.spacing(), BoundaryLocation::at_node(0), 2).unwrap();
        assert!((h - 9.0).abs() < 0.05, "{h}");
        let crit = critical_points(&f).unwrap();
        assert_eq!(crit.len(), 2);
        assert_eq!(crit[0].location.node, 0);
        assert!((crit[0].value - 0.1).abs() < 1e-12);
        assert_eq!(crit[1].location.node, g.n / 2);
    }

    #[test]
    fn critical_points_lie_on_the_line_through_the_origin() {
        let m = ManifoldModel::euclidean_disk(1.0).unwrap();
        let g = BoundaryGrid::for_model(&m, 2048);
        let p = Vec2::new(0.3, 0.4);
        let f = boundary_distance_function(&m, p, &g).unwrap();
        let crit = critical_points(&f).unwrap();
        assert_eq!(crit.len(), 2);
        let target = p.angle().rem_euclid(TAU);
        let a0 = crit[0].location.param(&g);
        let a1 = crit[1].location.param(&g);
        let err = |a: f64, b: f64| ((a - b).rem_euclid(TAU)).min((b - a).rem_euclid(TAU));
        let near = err(a0, target).min(err(a1, target));
        let far = err(a0, target + PI).min(err(a1, target + PI));
        assert!(near < 1e-6 && far < 1e-6, "{near} {far}");
    }

    #[test]
    fn hyperbolic_distance_from_center_is_constant() {
        let m = ManifoldModel::curved_disk(-1.0, 0.6).unwrap();
        let g = BoundaryGrid::for_model(&m, 256);
        let f = boundary_distance_function(&m, Vec2::ZERO, &g).unwrap();
        let rho = 2.0 * 0.6f64.atanh();
        assert!(f.iter().all(|v| (v - rho).abs() < 1e-12));
    }

    #[test]
    fn arc_distance_wraps() {
        let g = unit_grid(100);
        let a = BoundaryLocation { node: 98, offset: 0.25 };
        let b = BoundaryLocation { node: 1, offset: -0.25 };
        assert!((g.arc_distance(a, b) - 2.5 * g.spacing()).abs() < 1e-12);
        assert_eq!(g.arc_distance(a, b), g.arc_distance(b, a));
    }

    #[test]
    fn stencil_must_fit() {
        let f = vec![0.0; 16];
        assert!(boundary_hessian(&f, 0.1, BoundaryLocation::at_node(0), 4).is_err());
    }
}
