//! JSON model documents.
//!
//! ```json
//! {"d": 2, "alpha": 1.0,
//!  "mu": {"kind": "atomic", "atoms": [{"dir": [1, 0], "w": 0.25}, {"dir": [0, 1], "w": 0.25}]}}
//! ```
//!
//! A density model uses `"mu": {"kind": "density", "density": {"grid_points": N, "values": [..]}}`,
//! the values being the angular density per radian on `N` equal cells of the circle.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{ModelParams, RawSpectral};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub alpha: f64,
    pub mu: MuConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuKind {
    Atomic,
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuConfig {
    pub kind: MuKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub dir: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub grid_points: usize,
    pub values: Vec<f64>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_raw(&self) -> Result<RawSpectral> {
        match self.mu.kind {
            MuKind::Atomic => {
                if self.mu.density.is_some() {
                    return Err(Error::Config("atomic measure must not carry a density table".into()));
                }
                let atoms = self.mu.atoms.as_ref().ok_or_else(|| Error::Config("atomic measure needs \"atoms\"".into()))?;
                if atoms.is_empty() {
                    return Err(Error::Config("atomic measure needs at least one atom".into()));
                }
                Ok(RawSpectral::Atomic(atoms.iter().map(|a| (a.dir.clone(), a.w)).collect()))
            }
            MuKind::Density => {
                if self.mu.atoms.is_some() {
                    return Err(Error::Config("density measure must not carry atoms".into()));
                }
                let dens = self.mu.density.as_ref().ok_or_else(|| Error::Config("density measure needs \"density\"".into()))?;
                if dens.grid_points != dens.values.len() {
                    return Err(Error::Config(format!(
                        "grid_points = {} but {} values were given",
                        dens.grid_points,
                        dens.values.len()
                    )));
                }
                Ok(RawSpectral::Density(dens.values.clone()))
            }
        }
    }

    /// Validate and build the model.
    pub fn build(&self) -> Result<ModelParams> {
        ModelParams::from_raw(self.d, self.alpha, &self.to_raw()?)
    }

    pub fn atomic(d: usize, alpha: f64, atoms: &[(Vec<f64>, f64)]) -> Self {
        ModelConfig {
            d,
            alpha,
            mu: MuConfig {
                kind: MuKind::Atomic,
                atoms: Some(atoms.iter().map(|(dir, w)| AtomConfig { dir: dir.clone(), w: *w }).collect()),
                density: None,
            },
        }
    }

    pub fn density(alpha: f64, values: &[f64]) -> Self {
        ModelConfig {
            d: 2,
            alpha,
            mu: MuConfig {
                kind: MuKind::Density,
                atoms: None,
                density: Some(DensityConfig { grid_points: values.len(), values: values.to_vec() }),
            },
        }
    }

    /// Built-in models: `isotropic-cauchy`, `product-cauchy`, `isotropic:ALPHA`, `axes:ALPHA:W`.
    pub fn preset(name: &str) -> Result<Self> {
        let parts: Vec<&str> = name.split(':').collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?} in preset {name:?}")));
        let uniform = |alpha: f64| Self::density(alpha, &vec![1.0 / std::f64::consts::TAU; crate::presets::ISOTROPIC_CELLS]);
        let axes = |alpha: f64, w: f64| {
            Self::atomic(
                2,
                alpha,
                &[(vec![1.0, 0.0], w), (vec![-1.0, 0.0], w), (vec![0.0, 1.0], w), (vec![0.0, -1.0], w)],
            )
        };
        match parts.as_slice() {
            ["isotropic-cauchy"] => Ok(uniform(1.0)),
            ["product-cauchy"] => Ok(axes(1.0, 1.0 / std::f64::consts::PI)),
            ["isotropic", a] => Ok(uniform(num(a)?)),
            ["axes", a, w] => Ok(axes(num(a)?, num(w)?)),
            _ => Err(Error::Config(format!("unknown preset {name:?}"))),
        }
    }
}
