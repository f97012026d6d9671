//! Ready-made models used by the CLI, the reports and the tests.

use std::f64::consts::TAU;

use crate::error::Result;
use crate::measure::{ModelParams, RawSpectral};

/// Cells used for the uniform angular density.
pub const ISOTROPIC_CELLS: usize = 64;

/// Uniform spectral measure of total mass `mass` (d = 2 density table; d = 3 is not tabulated).
pub fn isotropic(d: usize, alpha: f64, mass: f64) -> Result<ModelParams> {
    ModelParams::from_raw(d, alpha, &RawSpectral::Density(vec![mass / TAU; ISOTROPIC_CELLS]))
}

/// Atoms ±e_i with weight `w` each.
pub fn axis_product(d: usize, alpha: f64, w: f64) -> Result<ModelParams> {
    let atoms = (0..d)
        .flat_map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            let mut f = vec![0.0; d];
            f[i] = -1.0;
            [(e, w), (f, w)]
        })
        .collect();
    ModelParams::from_raw(d, alpha, &RawSpectral::Atomic(atoms))
}

/// Product of 1-D Cauchy laws: atoms ±e_i of weight 1/π, so Φ(u) = Σ|u_i|.
pub fn product_cauchy(d: usize) -> Result<ModelParams> {
    axis_product(d, 1.0, 1.0 / std::f64::consts::PI)
}

/// 2-D isotropic Cauchy: α = 1, uniform μ of unit mass, Φ(u) = |u|.
pub fn isotropic_cauchy() -> Result<ModelParams> {
    isotropic(2, 1.0, 1.0)
}
