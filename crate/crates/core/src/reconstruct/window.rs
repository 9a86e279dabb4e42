//! Reconstruction from growing observation windows `[0, T]`.

use serde::{Deserialize, Serialize};

use super::{sweep_epsilon1, Bound, ReconstructError, ReconstructParams, ReconstructReport};
use crate::constants::GeometryConstants;
use crate::disentangle::{dedupe_spatial, separate, ArrivalFunction, DisentangleError, SeparateParams};
use crate::observables::{assemble, default_obs_tol, DiscreteSpace, ObservablesError};
use crate::scene::{ArrivalCloud, Window};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    pub separate: SeparateParams,
    pub reconstruct: ReconstructParams,
    /// Observation tolerance; twice the grid spacing when absent.
    pub obs_tol: Option<f64>,
    pub const_tol: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams {
            separate: SeparateParams::default(),
            reconstruct: ReconstructParams::default(),
            obs_tol: None,
            const_tol: 1e-6,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WindowError {
    #[error("T values must be ascending")]
    Order,
    #[error("window T={t}: {source}")]
    Disentangle { t: f64, source: DisentangleError },
    #[error("window T={t}: {source}")]
    Observables { t: f64, source: ObservablesError },
    #[error("window T={t}: {source}")]
    Reconstruct { t: f64, source: ReconstructError },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowResult {
    pub t: f64,
    /// Complete arrival graphs inside the window after deduplication.
    pub complete_graphs: usize,
    /// `None` for the one-point fallback space.
    pub space: Option<DiscreteSpace>,
    pub report: Option<ReconstructReport>,
    /// Index into the space per grid node.
    pub alpha: Option<Vec<usize>>,
    pub lgh_bound: Bound,
}

impl WindowResult {
    pub fn is_one_point(&self) -> bool {
        self.space.is_none()
    }
}

/// Complete graphs whose range fits a distance function, `τ ≤ a ≤ τ + C_diam`.
fn admissible(functions: Vec<ArrivalFunction>, c_diam: f64) -> Vec<ArrivalFunction> {
    functions
        .into_iter()
        .filter(|f| {
            let (lo, hi) = f.min_max();
            hi - lo <= c_diam
        })
        .collect()
}

/// One reconstruction per window `[0, T]`; `f64::INFINITY` means all data.
pub fn window_reconstruct(
    cloud: &ArrivalCloud,
    t_list: &[f64],
    constants: &GeometryConstants,
    params: &WindowParams,
) -> Result<Vec<WindowResult>, WindowError> {
    if t_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(WindowError::Order);
    }
    let grid = cloud.header.grid();
    let obs_tol = params.obs_tol.unwrap_or_else(|| default_obs_tol(&grid));
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let window = if t.is_finite() { Window::up_to(t) } else { Window::unbounded() };
        let sub = cloud.windowed(window);
        let sep = separate(&sub, &params.separate).map_err(|source| WindowError::Disentangle { t, source })?;
        let functions = admissible(dedupe_spatial(&sep.functions, params.const_tol).functions, constants.fundamental.c_diam);
        if functions.is_empty() {
            out.push(WindowResult {
                t,
                complete_graphs: 0,
                space: None,
                report: None,
                alpha: None,
                lgh_bound: Bound::Infinite,
            });
            continue;
        }
        let space = assemble(&grid, &functions, obs_tol).map_err(|source| WindowError::Observables { t, source })?;
        let rec = sweep_epsilon1(&space, constants, &params.reconstruct).map_err(|source| WindowError::Reconstruct { t, source })?;
        out.push(WindowResult {
            t,
            complete_graphs: functions.len(),
            lgh_bound: rec.report.lgh_bound,
            report: Some(rec.report),
            alpha: rec.alpha,
            space: Some(space),
        });
    }
    Ok(out)
}
