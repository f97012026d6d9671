//! Transition densities p_t and their derivatives D^β p_t.
//!
//! Grids come from an inverse FFT of `(iu)^β exp(−tΦ(u))`. A single periodic
//! FFT aliases the heavy tails badly, so the dual lattice is refined by
//! `oversample` sub-lattice offsets (each one FFT with a phase twist) and the
//! remaining periodization error, which scales like the period to the power
//! `−(α+γ)`, is removed by Richardson extrapolation against the even offsets.
//!
//! Point values use polar coordinates in frequency space, where the radial
//! integral is the kernel `E_n` of [`crate::kernel`].

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{kernel, RadialKernel};
use crate::measure::{ModelParams, SpectralMeasure};
use crate::quadrature::{adaptive, breakpoints};
use crate::stats::linear_fit;
use crate::symbol::{kink_angles, phi_angle, phi_fast, phi_sphere_bounds};
use crate::vecops::{angle, frame3, norm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Side length; the grid covers `[−L/2, L/2)^d`.
    pub extent: f64,
    /// Points per axis (power of two).
    pub points: usize,
    pub t: f64,
    /// Sub-lattice refinement of the dual grid: 1 (plain periodic FFT) or an even number.
    pub oversample: usize,
}

impl GridSpec {
    pub fn new(extent: f64, points: usize, t: f64) -> Self {
        GridSpec { extent, points, t, oversample: 8 }
    }

    pub fn default_for(d: usize) -> Self {
        match d {
            2 => GridSpec { extent: 64.0, points: 1024, t: 1.0, oversample: 8 },
            _ => GridSpec { extent: 32.0, points: 128, t: 1.0, oversample: 1 },
        }
    }

    pub fn with_oversample(mut self, k: usize) -> Self {
        self.oversample = k;
        self
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    /// Radius of the declared accuracy region.
    pub fn accurate_radius(&self) -> f64 {
        self.extent / 4.0
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let n = self.points;
        if n < 64 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("points per axis must be a power of two ≥ 64, got {n}")));
        }
        if !(self.extent > 0.0) || self.spacing() > 0.25 {
            return Err(Error::InvalidParameter(format!("mesh L/N = {} exceeds 0.25", self.spacing())));
        }
        if !(self.t > 0.0) {
            return Err(Error::InvalidParameter("time must be positive".into()));
        }
        if self.oversample == 0 || (self.oversample > 1 && self.oversample % 2 != 0) {
            return Err(Error::InvalidParameter("oversample must be 1 or even".into()));
        }
        if d == 3 && n > 256 {
            return Err(Error::InvalidParameter("d = 3 grids are capped at N = 256".into()));
        }
        if d > 3 {
            return Err(Error::Unsupported("grids are implemented for d = 2, 3".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityField {
    pub grid: GridSpec,
    pub d: usize,
    pub beta: Vec<usize>,
    /// Row-major samples, last axis fastest; index `j` is at `x = (j − N/2) h`.
    pub values: Vec<f64>,
    /// Largest imaginary part seen on self-conjugate sub-lattices, relative to max |value|.
    pub imag_residue: f64,
}

impl DensityField {
    pub fn n(&self) -> usize {
        self.grid.points
    }

    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.grid.points / 2) as f64) * self.grid.spacing()
    }

    /// Grid point of a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let n = self.n();
        let mut idx = vec![0; self.d];
        let mut r = flat;
        for k in (0..self.d).rev() {
            idx[k] = r % n;
            r /= n;
        }
        idx.iter().map(|j| self.coord(*j)).collect()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, j| acc * self.n() + j)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.flat(idx)]
    }

    /// Index of the grid point nearest to zero offset `k` along every axis (`x = k h`).
    pub fn index_of_offset(&self, k: &[i64]) -> Option<Vec<usize>> {
        let half = (self.n() / 2) as i64;
        k.iter()
            .map(|v| {
                let j = v + half;
                if j >= 0 && j < self.n() as i64 {
                    Some(j as usize)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.spacing().powi(self.d as i32)
    }

    /// Grid sum × cell volume.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Discrete convolution with another field on the same grid (zero padded),
    /// scaled by the cell volume.
    pub fn convolve(&self, other: &DensityField) -> Result<DensityField> {
        if self.grid.points != other.grid.points || self.grid.extent != other.grid.extent || self.d != other.d {
            return Err(Error::InvalidParameter("convolution needs identical grids".into()));
        }
        let n = self.n();
        let p = 2 * n;
        let d = self.d;
        let total = p.pow(d as u32);
        let embed = |f: &DensityField| {
            let mut buf = vec![Complex64::new(0.0, 0.0); total];
            for (flat, v) in f.values.iter().enumerate() {
                let mut r = flat;
                let mut q = 0;
                let mut mult = 1;
                for _ in 0..d {
                    q += (r % n) * mult;
                    r /= n;
                    mult *= p;
                }
                buf[q] = Complex64::new(*v, 0.0);
            }
            buf
        };
        let mut a = embed(self);
        let mut b = embed(other);
        let mut planner = FftPlanner::new();
        fft_nd(&mut planner, &mut a, p, d, FftDirection::Forward);
        fft_nd(&mut planner, &mut b, p, d, FftDirection::Forward);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        fft_nd(&mut planner, &mut a, p, d, FftDirection::Inverse);
        let scale = self.cell_volume() / total as f64;
        let mut values = vec![0.0; self.values.len()];
        for (flat, out) in values.iter_mut().enumerate() {
            // q_k = g_k + N/2 in padded coordinates (reverse order of axes matches embed)
            let mut r = flat;
            let mut q = 0;
            let mut mult = 1;
            for _ in 0..d {
                q += ((r % n) + n / 2) * mult;
                r /= n;
                mult *= p;
            }
            *out = a[q].re * scale;
        }
        Ok(DensityField { values, imag_residue: 0.0, ..self.clone() })
    }

    /// CSV rows `x1,…,xd,value`.
    pub fn write_csv(&self, path: &Path, clamp_negative: bool) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        let header: Vec<String> = (1..=self.d).map(|k| format!("x{k}")).chain(["value".to_string()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for (flat, v) in self.values.iter().enumerate() {
            let x = self.point(flat);
            let v = if clamp_negative && self.beta.iter().all(|b| *b == 0) { v.max(0.0) } else { *v };
            let cols: Vec<String> = x.iter().map(|c| format!("{c}")).collect();
            writeln!(w, "{},{:e}", cols.join(","), v)?;
        }
        Ok(())
    }
}

fn fft_nd(planner: &mut FftPlanner<f64>, buf: &mut [Complex64], n: usize, d: usize, dir: FftDirection) {
    let fft = planner.plan_fft(n, dir);
    let total = buf.len();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        if stride == 1 {
            fft.process(buf);
            continue;
        }
        let block = stride * n;
        for start in (0..total).step_by(block) {
            for off in 0..stride {
                for (k, l) in line.iter_mut().enumerate() {
                    *l = buf[start + off + k * stride];
                }
                fft.process(&mut line);
                for (k, l) in line.iter().enumerate() {
                    buf[start + off + k * stride] = *l;
                }
            }
        }
    }
}

fn check_beta(d: usize, beta: &[usize]) -> Result<()> {
    if beta.len() != d {
        return Err(Error::InvalidParameter(format!("multiindex has {} entries, expected {d}", beta.len())));
    }
    if beta.iter().sum::<usize>() > 3 {
        return Err(Error::InvalidParameter("derivative order above 3".into()));
    }
    Ok(())
}

/// Samples of D^β p_t on the grid `g`.
pub fn density_grid(m: &ModelParams, g: &GridSpec, beta: &[usize]) -> Result<DensityField> {
    let d = m.d();
    g.validate(d)?;
    check_beta(d, beta)?;
    let alpha = m.alpha();
    let n = g.points;
    let h = g.spacing();
    let (phi_min, _) = phi_sphere_bounds(m, 256)?;
    let tail = (-g.t * phi_min * (PI / h).powf(alpha)).exp();
    if tail > 1e-12 {
        return Err(Error::GridTooCoarse { tail });
    }
    let k = g.oversample;
    let du = TAU / g.extent;
    let total = n.pow(d as u32);
    let order: usize = beta.iter().sum();
    let ipow = Complex64::i().powi(order as i32);
    let richardson = k >= 2;
    let mut fine = vec![0.0; total];
    let mut coarse = vec![0.0; if richardson { total } else { 0 }];
    let mut residue: f64 = 0.0;
    let mut planner = FftPlanner::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    let offsets = k.pow(d as u32);
    let half = (n / 2) as i64;
    // signed frequency and spatial indices by FFT position
    let signed: Vec<i64> = (0..n as i64).map(|j| if j < half { j } else { j - n as i64 }).collect();
    let mut ucomp = vec![0.0; d];
    for s_flat in 0..offsets {
        let s = unflatten(s_flat, k, d);
        let partner: Vec<usize> = s.iter().map(|v| (k - v) % k).collect();
        let p_flat = flatten(&partner, k);
        if p_flat < s_flat {
            continue;
        }
        let self_conj = p_flat == s_flat;
        let weight = if self_conj { 1.0 } else { 2.0 };
        for (flat, b) in buf.iter_mut().enumerate() {
            let mut r = flat;
            let mut mono = 1.0;
            for c in (0..d).rev() {
                let j = r % n;
                r /= n;
                let u = (signed[j] as f64 + s[c] as f64 / k as f64) * du;
                ucomp[c] = u;
                if beta[c] > 0 {
                    mono *= u.powi(beta[c] as i32);
                }
            }
            let e = (-g.t * phi_fast(m, &ucomp)).exp();
            *b = ipow * (mono * e);
        }
        fft_nd(&mut planner, &mut buf, n, d, FftDirection::Inverse);
        let even = s.iter().all(|v| v % 2 == 0);
        let mut max_re: f64 = 0.0;
        let mut max_im: f64 = 0.0;
        for (flat, b) in buf.iter().enumerate() {
            let mut r = flat;
            let mut phase = 0.0;
            let mut out = 0;
            let mut mult = 1;
            for c in (0..d).rev() {
                let j = r % n;
                r /= n;
                phase += s[c] as f64 * signed[j] as f64;
                out += ((signed[j] + half) as usize) * mult;
                mult *= n;
            }
            let tw = Complex64::from_polar(1.0, TAU * phase / (n * k) as f64);
            let v = b * tw;
            if self_conj {
                max_re = max_re.max(v.re.abs());
                max_im = max_im.max(v.im.abs());
            }
            fine[out] += weight * v.re;
            if richardson && even {
                coarse[out] += weight * v.re;
            }
        }
        if self_conj && max_re > 0.0 {
            residue = residue.max(max_im / max_re);
        }
    }
    let pref = (1.0 / g.extent).powi(d as i32);
    let kd = offsets as f64;
    let values = if richardson {
        let kc = (k / 2).pow(d as u32) as f64;
        let gamma = m.indices().gamma;
        let r = 2f64.powf(alpha + gamma);
        fine.iter()
            .zip(&coarse)
            .map(|(f, c)| pref * (r * f / kd - c / kc) / (r - 1.0))
            .collect()
    } else {
        fine.iter().map(|f| pref * f / kd).collect()
    };
    Ok(DensityField { grid: *g, d, beta: beta.to_vec(), values, imag_residue: residue })
}

fn unflatten(mut f: usize, k: usize, d: usize) -> Vec<usize> {
    let mut v = vec![0; d];
    for c in (0..d).rev() {
        v[c] = f % k;
        f /= k;
    }
    v
}

fn flatten(v: &[usize], k: usize) -> usize {
    v.iter().fold(0, |a, x| a * k + x)
}

/// Value with the quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointValue {
    pub value: f64,
    pub error: f64,
}

const REL_TOL: f64 = 1e-11;

/// D^β p₁(x) by angular quadrature of the radial kernel.
pub fn p1_derivative(m: &ModelParams, x: &[f64], beta: &[usize]) -> Result<PointValue> {
    let d = m.d();
    assert_eq!(x.len(), d, "point dimension mismatch");
    check_beta(d, beta)?;
    let k = kernel(m.alpha());
    match d {
        2 => Ok(p1_plane(m, &k, x, beta)),
        3 => match m.mu() {
            SpectralMeasure::Atomic { .. } => Ok(p1_space(m, &k, x, beta)),
            _ => Err(Error::Unsupported("density measures in d = 3".into())),
        },
        _ => Err(Error::Unsupported("pointwise densities for d > 3".into())),
    }
}

fn p1_plane(m: &ModelParams, k: &RadialKernel, x: &[f64], beta: &[usize]) -> PointValue {
    let alpha = m.alpha();
    let order: usize = beta.iter().sum();
    let nn = 2 + order;
    let ipow = Complex64::i().powi(order as i32);
    let r = norm(x);
    let base = if r > 0.0 { angle(x) + PI / 2.0 } else { 0.0 };
    let mut extra: Vec<f64> = Vec::new();
    if m.mu().is_atomic() {
        for kink in kink_angles(m) {
            extra.push((kink - base).rem_euclid(PI));
        }
    }
    if r > 0.0 {
        for c in [1.0, 4.0, 20.0] {
            let e = (c / r).min(1.0);
            extra.push(e);
            extra.push(PI - e);
        }
    }
    let pts = breakpoints(0.0, PI, extra);
    let f = |eta: f64| {
        let psi = base + eta;
        let (sw, cw) = psi.sin_cos();
        let phi = phi_angle(m, psi);
        let scale = phi.powf(-1.0 / alpha);
        let z = -r * eta.sin() * scale;
        let mut mono = 1.0;
        if beta[0] > 0 {
            mono *= cw.powi(beta[0] as i32);
        }
        if beta[1] > 0 {
            mono *= sw.powi(beta[1] as i32);
        }
        mono * scale.powi(nn as i32) * (ipow * k.eval(nn, z)).re
    };
    let res = adaptive(f, &pts, REL_TOL, 1e-300, 4000);
    let c = 2.0 / (TAU * TAU);
    PointValue { value: c * res.value, error: c * res.error }
}

fn p1_space(m: &ModelParams, k: &RadialKernel, x: &[f64], beta: &[usize]) -> PointValue {
    let alpha = m.alpha();
    let order: usize = beta.iter().sum();
    let nn = 3 + order;
    let ipow = Complex64::i().powi(order as i32);
    let r = norm(x);
    let fr = if r > 0.0 { frame3(x) } else { [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };
    let pairs = m.scaled_pairs();
    let q: Vec<[f64; 3]> = pairs
        .iter()
        .map(|p| {
            let dv = |e: &[f64; 3]| e[0] * p.dir[0] + e[1] * p.dir[1] + e[2] * p.dir[2];
            [dv(&fr[0]), dv(&fr[1]), dv(&fr[2])]
        })
        .collect();
    let mut cuts: Vec<f64> = q.iter().map(|qq| (qq[1] * qq[1] + qq[2] * qq[2]).sqrt()).collect();
    if r > 0.0 {
        for c in [1.0, 4.0, 20.0] {
            cuts.push((c / r).min(1.0));
        }
    }
    let cpts = breakpoints(0.0, 1.0, cuts);
    let mut inner_err = 0.0;
    let outer = |c: f64| {
        let sc = (1.0 - c * c).max(0.0).sqrt();
        let mut kinks = Vec::new();
        for qq in &q {
            let rr = (qq[1] * qq[1] + qq[2] * qq[2]).sqrt();
            if rr * sc <= 0.0 {
                continue;
            }
            let arg = -c * qq[0] / (sc * rr);
            if arg.abs() <= 1.0 {
                let p0 = qq[2].atan2(qq[1]);
                let a = arg.acos();
                kinks.push((p0 + a).rem_euclid(TAU));
                kinks.push((p0 - a).rem_euclid(TAU));
            }
        }
        let ppts = breakpoints(0.0, TAU, kinks);
        let f = |ph: f64| {
            let (s, co) = ph.sin_cos();
            let w: Vec<f64> = (0..3).map(|i| c * fr[0][i] + sc * (co * fr[1][i] + s * fr[2][i])).collect();
            let phi = phi_fast(m, &w);
            let scale = phi.powf(-1.0 / alpha);
            let mut mono = 1.0;
            for i in 0..3 {
                if beta[i] > 0 {
                    mono *= w[i].powi(beta[i] as i32);
                }
            }
            mono * scale.powi(nn as i32) * (ipow * k.eval(nn, c * r * scale)).re
        };
        let res = adaptive(f, &ppts, REL_TOL, 1e-300, 2000);
        inner_err += res.error;
        res.value
    };
    let res = adaptive(outer, &cpts, 1e-10, 1e-300, 400);
    let c = 2.0 / TAU.powi(3);
    PointValue { value: c * res.value, error: c * (res.error + 1e-3 * inner_err) }
}

/// p_t(x) through the scaling reduction to t = 1.
pub fn density_point(m: &ModelParams, t: f64, x: &[f64]) -> Result<f64> {
    density_derivative_point(m, t, x, &vec![0; m.d()])
}

/// D^β p_t(x) = t^{−(d+|β|)/α} (D^β p₁)(t^{−1/α} x).
pub fn density_derivative_point(m: &ModelParams, t: f64, x: &[f64], beta: &[usize]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("time must be positive".into()));
    }
    let a = m.alpha();
    let s = t.powf(-1.0 / a);
    let xs: Vec<f64> = x.iter().map(|c| c * s).collect();
    let order: usize = beta.iter().sum();
    let v = p1_derivative(m, &xs, beta)?.value;
    Ok(v * t.powf(-((m.d() + order) as f64) / a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// Log-log slope of |D^β p₁(r·dir)| over log-spaced radii in `r_range`.
pub fn decay_fit_derivative(
    m: &ModelParams,
    direction: &[f64],
    r_range: (f64, f64),
    n_pts: usize,
    beta: &[usize],
) -> Result<DecayFit> {
    let (lo, hi) = r_range;
    if lo < 2.0 || hi <= lo {
        return Err(Error::InvalidParameter(format!("radius range must satisfy 2 ≤ r_lo < r_hi, got {r_range:?}")));
    }
    if n_pts < 8 {
        return Err(Error::InvalidParameter("need at least 8 radii".into()));
    }
    let nd = norm(direction);
    let dir: Vec<f64> = direction.iter().map(|c| c / nd).collect();
    let radii: Vec<f64> = (0..n_pts)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n_pts - 1) as f64))
        .collect();
    let mut values = Vec::with_capacity(n_pts);
    for r in &radii {
        let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
        values.push(p1_derivative(m, &x, beta)?.value);
    }
    if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::FitUnstable { r_squared: 0.0, detail: "profile vanishes or is not finite".into() });
    }
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let lv: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    let fit = linear_fit(&lr, &lv);
    if fit.r_squared < 0.99 {
        return Err(Error::FitUnstable {
            r_squared: fit.r_squared,
            detail: format!("decay slope {:.4} is not a clean power law", fit.slope),
        });
    }
    Ok(DecayFit { slope: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared, radii, values })
}

/// Log-log slope of p₁(r·dir) over log-spaced radii in `r_range`.
pub fn decay_fit(m: &ModelParams, direction: &[f64], r_range: (f64, f64), n_pts: usize) -> Result<DecayFit> {
    decay_fit_derivative(m, direction, r_range, n_pts, &vec![0; m.d()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn cauchy_iso(x: &[f64]) -> f64 {
        (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-1.5) / TAU
    }

    fn cauchy_prod(x: &[f64]) -> f64 {
        x.iter().map(|c| 1.0 / (PI * (1.0 + c * c))).product()
    }

    #[test]
    fn point_values_match_closed_forms() {
        let iso = presets::isotropic_cauchy().unwrap();
        let prod = presets::product_cauchy(2).unwrap();
        for x in [[0.0, 0.0], [0.3, -0.2], [1.0, 1.0], [5.0, 2.0], [40.0, -3.0], [300.0, 100.0]] {
            let v = density_point(&iso, 1.0, &x).unwrap();
            assert!((v - cauchy_iso(&x)).abs() < 1e-8 * cauchy_iso(&x), "{x:?}: {v}");
            let v = density_point(&prod, 1.0, &x).unwrap();
            assert!((v - cauchy_prod(&x)).abs() < 1e-7 * cauchy_prod(&x), "{x:?}: {v} vs {}", cauchy_prod(&x));
        }
        let v = density_point(&iso, 4.0, &[0.0, 0.0]).unwrap();
        assert!((v - 1.0 / (16.0 * TAU)).abs() < 1e-12);
        let v = density_point(&prod, 1.0, &[50.0, 0.0]).unwrap();
        assert!((v - 1.0 / (PI * PI * 2501.0)).abs() < 1e-8 * v);
    }

    #[test]
    fn derivative_points_match_closed_form() {
        let prod = presets::product_cauchy(2).unwrap();
        let c = |x: f64| 1.0 / (PI * (1.0 + x * x));
        let c1 = |x: f64| -2.0 * x / (PI * (1.0 + x * x).powi(2));
        let c2 = |x: f64| (6.0 * x * x - 2.0) / (PI * (1.0 + x * x).powi(3));
        for x in [[0.5, 1.5], [3.0, -0.2], [12.0, 7.0]] {
            let v = p1_derivative(&prod, &x, &[1, 0]).unwrap().value;
            assert!((v - c1(x[0]) * c(x[1])).abs() < 1e-8 * c(x[1]) * 0.1);
            let v = p1_derivative(&prod, &x, &[1, 1]).unwrap().value;
            assert!((v - c1(x[0]) * c1(x[1])).abs() < 1e-9);
            let v = p1_derivative(&prod, &x, &[0, 2]).unwrap().value;
            assert!((v - c(x[0]) * c2(x[1])).abs() < 1e-9);
        }
    }

    #[test]
    fn three_dimensional_product() {
        let prod = presets::product_cauchy(3).unwrap();
        for x in [[0.0, 0.0, 0.0], [0.5, -1.0, 2.0], [6.0, 0.0, 1.0]] {
            let exact = cauchy_prod(&x);
            let v = density_point(&prod, 1.0, &x).unwrap();
            assert!((v - exact).abs() < 1e-6 * exact, "{x:?}: {v} vs {exact}");
        }
    }

    #[test]
    fn scaling_and_symmetry_of_points() {
        let m = presets::axis_product(2, 1.3, 0.4).unwrap();
        let x = [0.7, -1.1];
        for k in [0.5f64, 1.3, 2.0] {
            let a = density_point(&m, 1.0, &x).unwrap();
            let b = density_point(&m, k.powf(1.3), &[k * x[0], k * x[1]]).unwrap() * k * k;
            assert!((a - b).abs() < 1e-6 * a);
        }
        let a = density_point(&m, 0.8, &x).unwrap();
        let b = density_point(&m, 0.8, &[-x[0], -x[1]]).unwrap();
        assert!((a - b).abs() < 1e-8 * a);
    }

    #[test]
    fn small_grid_matches_closed_form() {
        let prod = presets::product_cauchy(2).unwrap();
        let g = GridSpec::new(32.0, 512, 1.0);
        let f = density_grid(&prod, &g, &[0, 0]).unwrap();
        let mut worst: f64 = 0.0;
        for (flat, v) in f.values.iter().enumerate() {
            let x = f.point(flat);
            if norm(&x) <= g.accurate_radius() {
                let e = cauchy_prod(&x);
                worst = worst.max((v - e).abs() / e);
            }
        }
        assert!(worst < 1e-3, "worst relative error {worst}");
        assert!(f.imag_residue < 1e-8);
    }

    #[test]
    fn periodic_grid_has_unit_mass() {
        let iso = presets::isotropic_cauchy().unwrap();
        let g = GridSpec::new(32.0, 512, 1.0).with_oversample(1);
        let f = density_grid(&iso, &g, &[0, 0]).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coarse_grid_rejected() {
        let m = presets::axis_product(2, 0.3, 0.25).unwrap();
        let g = GridSpec::new(64.0, 256, 1.0);
        assert!(matches!(density_grid(&m, &g, &[0, 0]), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn decay_examples() {
        let prod = presets::product_cauchy(2).unwrap();
        let s = decay_fit(&prod, &[1.0, 0.0], (5.0, 50.0), 12).unwrap().slope;
        assert!((s + 2.0).abs() < 0.1, "{s}");
        let s = decay_fit(&prod, &[1.0, 1.0], (5.0, 50.0), 12).unwrap().slope;
        assert!((s + 4.0).abs() < 0.15, "{s}");
        let iso = presets::isotropic_cauchy().unwrap();
        let s = decay_fit(&iso, &[0.6, 0.8], (5.0, 50.0), 12).unwrap().slope;
        assert!((s + 3.0).abs() < 0.1, "{s}");
        assert!(decay_fit(&iso, &[1.0, 0.0], (1.0, 50.0), 12).is_err());
    }
}
