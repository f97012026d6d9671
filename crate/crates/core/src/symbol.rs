//! Characteristic exponent Φ(u) = C_α ∫_S |⟨u, ξ⟩|^α μ(dξ).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::measure::{probe_directions, AngularDensity, ModelParams, SpectralMeasure};
use crate::quadrature::GaussLegendre;
use crate::vecops::{angle, dot, norm};

/// Minimum total number of quadrature nodes for density measures.
pub const DENSITY_NODES: usize = 4096;
const TABLE_SIZE: usize = 8192;

/// The normalizing constant π / (2 sin(πα/2) Γ(1+α)).
pub fn c_alpha(alpha: f64) -> f64 {
    PI / (2.0 * (PI * alpha / 2.0).sin() * gamma(1.0 + alpha))
}

/// Φ(u), exact for atomic μ and by kink-aware Gauss–Legendre for density μ.
pub fn char_exponent(m: &ModelParams, u: &[f64]) -> f64 {
    assert_eq!(u.len(), m.d(), "frequency dimension mismatch");
    let alpha = m.alpha();
    match m.mu() {
        SpectralMeasure::Atomic { .. } => atomic_phi(m, u),
        SpectralMeasure::AngularDensity { density } => {
            let nu = norm(u);
            if nu == 0.0 {
                return 0.0;
            }
            c_alpha(alpha) * nu.powf(alpha) * density_profile(density, alpha, angle(u))
        }
    }
}

#[inline]
fn atomic_phi(m: &ModelParams, u: &[f64]) -> f64 {
    let alpha = m.alpha();
    let mut s = 0.0;
    for p in m.scaled_pairs() {
        let v = dot(&p.dir, u).abs();
        if v > 0.0 {
            s += p.weight * if alpha == 1.0 { v } else { v.powf(alpha) };
        }
    }
    s
}

/// ∫ f(ψ) |cos(θ − ψ)|^α dψ split at cell boundaries and at the kinks θ ± π/2.
fn density_profile(dens: &AngularDensity, alpha: f64, theta: f64) -> f64 {
    let w = dens.cell_width();
    let lo = -0.5 * w;
    let hi = TAU - 0.5 * w;
    let mut cuts: Vec<f64> = dens.boundaries_in(lo, hi);
    for k in [theta - FRAC_PI_2, theta + FRAC_PI_2] {
        let k = lo + (k - lo).rem_euclid(TAU);
        cuts.push(k);
    }
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let pieces = cuts.len() - 1;
    let order = DENSITY_NODES.div_ceil(pieces).max(8);
    let gl = GaussLegendre::cached(order);
    let mut s = 0.0;
    for c in cuts.windows(2) {
        let f = dens.value_at(0.5 * (c[0] + c[1]));
        if f == 0.0 {
            continue;
        }
        s += f * gl.integrate(c[0], c[1], |psi| (theta - psi).cos().abs().powf(alpha));
    }
    s
}

/// Periodic table of Φ on the unit circle, sampled on `[0, π)`.
#[derive(Debug, Clone)]
pub struct PhiTable {
    values: Vec<f64>,
    step: f64,
}

impl PhiTable {
    fn build(dens: &AngularDensity, alpha: f64) -> Self {
        let step = PI / TABLE_SIZE as f64;
        let c = c_alpha(alpha);
        let values = (0..TABLE_SIZE).map(|i| c * density_profile(dens, alpha, i as f64 * step)).collect();
        PhiTable { values, step }
    }

    /// Φ(e_θ) by 4-point Lagrange interpolation.
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.values.len() as i64;
        let t = theta / self.step;
        let i = t.floor();
        let f = t - i;
        let i = i as i64;
        let v = |k: i64| self.values[(i + k).rem_euclid(n) as usize];
        let (a, b, c, d) = (v(-1), v(0), v(1), v(2));
        let fm1 = f - 1.0;
        let fm2 = f - 2.0;
        let fp1 = f + 1.0;
        -a * f * fm1 * fm2 / 6.0 + b * fp1 * fm1 * fm2 / 2.0 - c * fp1 * f * fm2 / 2.0 + d * fp1 * f * fm1 / 6.0
    }
}

/// Φ(u) using the cached direction table for density μ (exact for atomic μ).
#[inline]
pub fn phi_fast(m: &ModelParams, u: &[f64]) -> f64 {
    match m.mu() {
        SpectralMeasure::Atomic { .. } => atomic_phi(m, u),
        SpectralMeasure::AngularDensity { .. } => {
            let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
            if nu == 0.0 {
                return 0.0;
            }
            phi_table(m).eval(u[1].atan2(u[0])) * nu.powf(m.alpha())
        }
    }
}

/// Φ on the unit circle at angle `theta` (d = 2 only).
#[inline]
pub fn phi_angle(m: &ModelParams, theta: f64) -> f64 {
    match m.mu() {
        SpectralMeasure::Atomic { .. } => {
            let (s, c) = theta.sin_cos();
            atomic_phi(m, &[c, s])
        }
        SpectralMeasure::AngularDensity { .. } => phi_table(m).eval(theta),
    }
}

pub(crate) fn phi_table(m: &ModelParams) -> &PhiTable {
    m.cache.phi_table.get_or_init(|| match m.mu() {
        SpectralMeasure::AngularDensity { density } => PhiTable::build(density, m.alpha()),
        _ => unreachable!("direction table requested for an atomic measure"),
    })
}

/// Min and max of Φ over `n_probe` directions on the sphere.
pub fn phi_sphere_bounds(m: &ModelParams, n_probe: usize) -> Result<(f64, f64)> {
    if n_probe < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 probes, got {n_probe}")));
    }
    let dirs = match m.d() {
        2 => (0..n_probe)
            .map(|k| {
                let th = TAU * k as f64 / n_probe as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => probe_directions(m.d(), n_probe),
    };
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for u in dirs {
        let v = char_exponent(m, &u);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo > 1e-12 * hi) {
        return Err(Error::NondegeneracyViolated { min: lo, max: hi });
    }
    Ok((lo, hi))
}

/// Angles in `[0, π)` where Φ restricted to the circle has kinks (atomic μ, d = 2):
/// directions orthogonal to an atom.
pub fn kink_angles(m: &ModelParams) -> Vec<f64> {
    let mut v: Vec<f64> = m
        .scaled_pairs()
        .iter()
        .map(|p| (angle(&p.dir) + FRAC_PI_2).rem_euclid(PI))
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    v
}
