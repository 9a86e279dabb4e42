use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use lentil_core::io::open_read;

/// Tolerance file (TOML). Every key is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Geodesic distance tolerance of the manifold model.
    pub tol_dist: Option<f64>,
    /// Observation tolerance; twice the grid spacing when absent.
    pub obs_tol: Option<f64>,
    /// Absolute association tolerance; residual-scaled when absent.
    pub jet_tol: Option<f64>,
    /// Half-width in nodes of the boundary Hessian stencil.
    pub h_hess: usize,
    pub r_grid: usize,
    /// Inflation factor for estimated constants.
    pub safety: f64,
    /// Offsets below this merge spatially coincident sources.
    pub const_tol: f64,
    pub sweep_points: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_dist: None,
            obs_tol: None,
            jet_tol: None,
            h_hess: 1,
            r_grid: 32,
            safety: 1.1,
            const_tol: 1e-6,
            sweep_points: 24,
        }
    }
}

impl Tolerances {
    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        open_read(path)?
            .read_to_string(&mut text)
            .with_context(|| format!("{}", path.display()))?;
        let t: Tolerances = toml::from_str(&text).with_context(|| format!("{}", path.display()))?;
        t.validate().with_context(|| format!("{}", path.display()))?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tol_dist", self.tol_dist), ("obs_tol", self.obs_tol), ("jet_tol", self.jet_tol)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("field `{name}` must be positive and finite, got {v}");
                }
            }
        }
        if self.h_hess == 0 {
            bail!("field `h_hess` must be at least 1");
        }
        if self.r_grid == 0 {
            bail!("field `r_grid` must be at least 1");
        }
        if !(self.safety >= 1.0) {
            bail!("field `safety` must be at least 1, got {}", self.safety);
        }
        if !(self.const_tol >= 0.0) {
            bail!("field `const_tol` must be non-negative, got {}", self.const_tol);
        }
        if self.sweep_points < 2 {
            bail!("field `sweep_points` must be at least 2");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let t: Tolerances = toml::from_str("r_grid = 8\njet_tol = 1e-6").unwrap();
        assert_eq!(t.r_grid, 8);
        assert_eq!(t.jet_tol, Some(1e-6));
        assert_eq!(t.h_hess, 1);
    }

    #[test]
    fn unknown_and_invalid_fields_are_named() {
        let e = toml::from_str::<Tolerances>("rgrid = 8").unwrap_err().to_string();
        assert!(e.contains("rgrid"), "{e}");
        let t = Tolerances { safety: 0.5, ..Tolerances::default() };
        assert!(t.validate().unwrap_err().to_string().contains("safety"));
    }
}
