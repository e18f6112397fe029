//! Run configuration: a JSON file in the data dialect, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use wavebound_core::{FamilySide, Tolerances};

pub const MIN_GRID: usize = 8;
pub const DEFAULT_GRID: usize = 129;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dist: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub constants: Option<PathBuf>,
    pub tol_quad: Option<f64>,
    pub tol_root: Option<f64>,
    pub tol_ode: Option<f64>,
    pub grid: Option<usize>,
    pub parallel: Option<usize>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub side: Option<FamilySide>,
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("config {}", path.display()))
    }

    /// Values set in `flags` win.
    pub fn merged(mut self, flags: &RunConfig) -> Self {
        overlay!(self, flags; dist, field, out, constants, tol_quad, tol_root, tol_ode,
            grid, parallel, s, r, side, s_min, s_max, y_min, y_max);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tol_quad", self.tol_quad), ("tol_root", self.tol_root), ("tol_ode", self.tol_ode)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("{name} must be positive, got {v}");
                }
            }
        }
        if let Some(n) = self.grid {
            if n < MIN_GRID {
                bail!("grid must be at least {MIN_GRID}, got {n}");
            }
        }
        if self.parallel == Some(0) {
            bail!("parallel must be at least 1");
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            quad_rel: self.tol_quad.unwrap_or(d.quad_rel),
            root_abs: self.tol_root.unwrap_or(d.root_abs),
            ode_local: self.tol_ode.unwrap_or(d.ode_local),
        }
    }

    pub fn grid(&self) -> usize {
        self.grid.unwrap_or(DEFAULT_GRID)
    }

    pub fn require<T: Clone>(value: &Option<T>, name: &str) -> Result<T> {
        match value {
            Some(v) => Ok(v.clone()),
            None => bail!("missing --{name}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_json(r#"{"grid": 16, "tolerance": 1e-3}"#).unwrap_err();
        assert!(err.to_string().contains("tolerance"), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_json(r#"{"grid": 16, "s": 1.5, "side": "plus"}"#).unwrap();
        let flags = RunConfig { s: Some(2.0), ..RunConfig::default() };
        let m = file.merged(&flags);
        assert_eq!((m.grid, m.s, m.side), (Some(16), Some(2.0), Some(FamilySide::Plus)));
    }

    #[test]
    fn limits_are_enforced() {
        assert!(RunConfig { grid: Some(7), ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { tol_quad: Some(0.0), ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { parallel: Some(0), ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
