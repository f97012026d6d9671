//! Numerical toolkit for anisotropic symmetric α-stable semigroups on ℝ^d.
//!
//! A model is a stability index `alpha ∈ (0, 2)` together with a finite, symmetric,
//! nondegenerate spectral measure μ on the unit sphere. From it the crate derives
//!
//! * the Lévy measure ν (ball masses, tails, singular integrals) in [`measure`],
//! * the characteristic exponent Φ in [`symbol`],
//! * transition densities and their derivatives in [`density`],
//! * the potential kernel V and Hölder fits in [`potential`],
//! * exact / jump-split path simulation and first exits in [`simulate`],
//! * Monte Carlo harmonic measure, Green function, Poisson kernel and the
//!   Dynkin operator for the unit ball in [`harmonic`],
//! * end-to-end verification reports in [`reports`].

pub mod config;
pub mod density;
pub mod error;
pub mod harmonic;
pub mod kernel;
pub mod measure;
pub mod potential;
pub mod presets;
pub mod quadrature;
pub mod reports;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod symbol;
pub(crate) mod vecops;

pub use error::{Error, Result};
pub use measure::{ModelParams, PotentialClass, SmoothnessIndices, SpectralMeasure};
