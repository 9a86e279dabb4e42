//! Simple 2-D Riemannian disks: models, geodesics, boundary geometry.

pub mod boundary;
pub mod field;
pub mod geodesic;
pub mod model;
mod vec2;

pub use boundary::{
    boundary_distance_function, boundary_hessian, critical_points, hessian_at_nodes,
    BoundaryGrid, BoundaryLocation, BoundaryPoint, CriticalKind, CriticalPoint,
};
pub use field::{ConformalField, GridSpec};
pub use model::{ConformalSpec, ManifoldConfig, ManifoldModel, ModelKind};
pub use vec2::Vec2;

/// Spatial dimension of every model in this crate.
pub const DIMENSION: usize = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid conformal expression: {0}")]
    InvalidExpression(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("point ({}, {}) lies outside the closed disk", .0.x, .0.y)]
    OutsideDisk(Vec2),
    #[error("distance solver did not converge from ({}, {}) to ({}, {}); residual {residual:.3e}", from.x, from.y, to.x, to.y)]
    NoConvergence { from: Vec2, to: Vec2, residual: f64 },
    #[error("geodesic leaves the disk before time {0}")]
    LeftDisk(f64),
    #[error("hessian stencil: {0}")]
    Stencil(String),
    #[error("degenerate boundary function: {0}")]
    Degenerate(String),
}
