//! Spectral measure μ, the induced Lévy measure ν and the smoothness indices.

use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::stats::linear_fit;
use crate::vecops::{angle, dot, norm, sym_eig_extremes};

/// Directions within this distance of the unit sphere are renormalized silently.
pub const DIRECTION_TOLERANCE: f64 = 1e-6;
const GRAM_RATIO_MIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub dir: Vec<f64>,
    pub weight: f64,
}

/// Piecewise-constant angular density on the circle. Cell `i` is centred at
/// `θ_i = 2πi/N` and has width `2π/N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularDensity {
    values: Vec<f64>,
}

impl AngularDensity {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        i as f64 * self.cell_width()
    }

    pub fn cell_of(&self, theta: f64) -> usize {
        let n = self.values.len() as i64;
        ((theta / self.cell_width()).round() as i64).rem_euclid(n) as usize
    }

    pub fn value_at(&self, theta: f64) -> f64 {
        self.values[self.cell_of(theta)]
    }

    /// Cell-boundary angles strictly inside `(lo, hi)`.
    pub fn boundaries_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let w = self.cell_width();
        let k0 = ((lo / w) - 0.5).floor() as i64 + 1;
        let k1 = ((hi / w) - 0.5).ceil() as i64 - 1;
        (k0..=k1)
            .map(|k| (k as f64 + 0.5) * w)
            .filter(|b| *b > lo && *b < hi)
            .collect()
    }
}

/// Unvalidated input for [`validate_spectral`].
#[derive(Debug, Clone, PartialEq)]
pub enum RawSpectral {
    Atomic(Vec<(Vec<f64>, f64)>),
    Density(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralMeasure {
    Atomic { atoms: Vec<Atom> },
    AngularDensity { density: AngularDensity },
}

impl SpectralMeasure {
    pub fn total_mass(&self) -> f64 {
        match self {
            SpectralMeasure::Atomic { atoms } => atoms.iter().map(|a| a.weight).sum(),
            SpectralMeasure::AngularDensity { density } => {
                density.values.iter().sum::<f64>() * density.cell_width()
            }
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, SpectralMeasure::Atomic { .. })
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match self {
            SpectralMeasure::Atomic { atoms } => Some(atoms),
            _ => None,
        }
    }

    pub fn density(&self) -> Option<&AngularDensity> {
        match self {
            SpectralMeasure::AngularDensity { density } => Some(density),
            _ => None,
        }
    }

    /// One representative per symmetric pair `{ξ, −ξ}` with the pair's combined weight.
    pub fn pairs(&self) -> Vec<Atom> {
        match self {
            SpectralMeasure::Atomic { atoms } => atoms
                .iter()
                .filter(|a| leading_sign(&a.dir) > 0.0)
                .map(|a| Atom { dir: a.dir.clone(), weight: 2.0 * a.weight })
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn leading_sign(v: &[f64]) -> f64 {
    for c in v {
        if c.abs() > 1e-15 {
            return c.signum();
        }
    }
    0.0
}

/// Validate, normalize and symmetrize a raw spectral measure in dimension `d`.
pub fn validate_spectral(raw: &RawSpectral, d: usize) -> Result<SpectralMeasure> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {d}")));
    }
    match raw {
        RawSpectral::Atomic(list) => {
            if list.is_empty() {
                return Err(Error::InvalidParameter("no atoms given".into()));
            }
            let mut atoms: Vec<Atom> = Vec::new();
            let mut push = |dir: Vec<f64>, w: f64| {
                if let Some(a) = atoms.iter_mut().find(|a| {
                    a.dir.iter().zip(&dir).all(|(p, q)| (p - q).abs() <= 1e-12)
                }) {
                    a.weight += w;
                } else {
                    atoms.push(Atom { dir, weight: w });
                }
            };
            for (dir, w) in list {
                if dir.len() != d {
                    return Err(Error::InvalidParameter(format!(
                        "atom direction has {} components, expected {d}",
                        dir.len()
                    )));
                }
                if !w.is_finite() {
                    return Err(Error::InvalidParameter(format!("non-finite weight {w}")));
                }
                if *w < 0.0 {
                    return Err(Error::NegativeWeight(*w));
                }
                let n = norm(dir);
                if !n.is_finite() || (n - 1.0).abs() > DIRECTION_TOLERANCE {
                    return Err(Error::NonUnitDirection { norm: n });
                }
                if *w == 0.0 {
                    continue;
                }
                let u: Vec<f64> = dir.iter().map(|c| c / n).collect();
                let neg: Vec<f64> = u.iter().map(|c| -c).collect();
                push(u, 0.5 * w);
                push(neg, 0.5 * w);
            }
            if atoms.is_empty() {
                return Err(Error::InvalidParameter("total mass must be positive".into()));
            }
            let mut gram = vec![0.0; d * d];
            for a in &atoms {
                for i in 0..d {
                    for j in 0..d {
                        gram[i * d + j] += a.weight * a.dir[i] * a.dir[j];
                    }
                }
            }
            check_gram(&gram, d)?;
            Ok(SpectralMeasure::Atomic { atoms })
        }
        RawSpectral::Density(values) => {
            if d != 2 {
                return Err(Error::Unsupported("angular density tables are implemented for d = 2 only".into()));
            }
            let n = values.len();
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "density table needs an even number (≥ 4) of grid points, got {n}"
                )));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite density value {v}")));
            }
            if let Some(v) = values.iter().find(|v| **v < 0.0) {
                return Err(Error::NegativeWeight(*v));
            }
            if !values.iter().any(|v| *v > 0.0) {
                return Err(Error::InvalidParameter("density table has no positive value".into()));
            }
            let half = n / 2;
            let sym: Vec<f64> = (0..n).map(|i| 0.5 * (values[i] + values[(i + half) % n])).collect();
            let density = AngularDensity { values: sym };
            let w = density.cell_width();
            let mut gram = vec![0.0; 4];
            for (i, v) in density.values.iter().enumerate() {
                // exact cell integrals of the outer product
                let (a, b) = (density.center(i) - 0.5 * w, density.center(i) + 0.5 * w);
                let c2 = 0.5 * w + 0.25 * ((2.0 * b).sin() - (2.0 * a).sin());
                let s2 = 0.5 * w - 0.25 * ((2.0 * b).sin() - (2.0 * a).sin());
                let cs = 0.25 * ((2.0 * a).cos() - (2.0 * b).cos());
                gram[0] += v * c2;
                gram[1] += v * cs;
                gram[2] += v * cs;
                gram[3] += v * s2;
            }
            check_gram(&gram, 2)?;
            Ok(SpectralMeasure::AngularDensity { density })
        }
    }
}

fn check_gram(gram: &[f64], d: usize) -> Result<()> {
    let (lo, hi) = sym_eig_extremes(gram, d);
    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(ratio > GRAM_RATIO_MIN) {
        return Err(Error::DegenerateMeasure { ratio });
    }
    Ok(())
}

#[derive(Debug, Default)]
pub(crate) struct ModelCache {
    pub(crate) phi_table: OnceLock<crate::symbol::PhiTable>,
    pub(crate) indices: OnceLock<SmoothnessIndices>,
    pub(crate) potential_table: OnceLock<Result<Arc<crate::potential::PotentialTable>>>,
    pub(crate) jumps: OnceLock<crate::simulate::JumpSampler>,
    /// Pair representatives with weight `C_α · 2w`.
    pub(crate) scaled_pairs: OnceLock<Vec<Atom>>,
}

/// Dimension, stability index and validated spectral measure.
#[derive(Debug, Clone)]
pub struct ModelParams {
    d: usize,
    alpha: f64,
    mu: SpectralMeasure,
    pub(crate) cache: Arc<ModelCache>,
}

impl ModelParams {
    pub fn new(d: usize, alpha: f64, mu: SpectralMeasure) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {d}")));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        match &mu {
            SpectralMeasure::Atomic { atoms } => {
                if atoms.iter().any(|a| a.dir.len() != d) {
                    return Err(Error::InvalidParameter("atom dimension mismatch".into()));
                }
            }
            SpectralMeasure::AngularDensity { .. } => {
                if d != 2 {
                    return Err(Error::Unsupported("angular density tables are implemented for d = 2 only".into()));
                }
            }
        }
        Ok(ModelParams { d, alpha, mu, cache: Arc::new(ModelCache::default()) })
    }

    /// Validate a raw measure and build the model in one step.
    pub fn from_raw(d: usize, alpha: f64, raw: &RawSpectral) -> Result<Self> {
        let mu = validate_spectral(raw, d)?;
        Self::new(d, alpha, mu)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> &SpectralMeasure {
        &self.mu
    }

    pub(crate) fn scaled_pairs(&self) -> &[Atom] {
        self.cache.scaled_pairs.get_or_init(|| {
            let c = crate::symbol::c_alpha(self.alpha);
            self.mu
                .pairs()
                .into_iter()
                .map(|a| Atom { dir: a.dir, weight: c * a.weight })
                .collect()
        })
    }

    pub fn indices(&self) -> &SmoothnessIndices {
        self.cache.indices.get_or_init(|| gamma_estimate(self))
    }
}

/// Positive root interval `(s_lo, s_hi)` of `|sξ − x| < r`, if any.
#[inline]
fn ray_interval(xi: &[f64], x: &[f64], r: f64) -> Option<(f64, f64)> {
    let b = dot(xi, x);
    let c = dot(x, x) - r * r;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    if c > 0.0 {
        if b <= 0.0 {
            return None;
        }
        let hi = b + sq;
        Some((c / hi, hi))
    } else {
        Some((0.0, b + sq))
    }
}

/// `∫_{lo}^{hi} s^{−1−α} ds` without cancellation.
#[inline]
fn radial_mass(alpha: f64, lo: f64, hi: f64) -> f64 {
    if lo <= 0.0 {
        return f64::INFINITY;
    }
    let lr = ((hi - lo) / lo).ln_1p();
    -lo.powf(-alpha) * (-alpha * lr).exp_m1() / alpha
}

/// ν(B(x, r)).
pub fn nu_ball(m: &ModelParams, x: &[f64], r: f64) -> f64 {
    assert_eq!(x.len(), m.d(), "point dimension mismatch");
    assert!(r > 0.0, "radius must be positive");
    let alpha = m.alpha();
    let nx = norm(x);
    if nx <= r {
        return f64::INFINITY;
    }
    match m.mu() {
        SpectralMeasure::Atomic { atoms } => atoms
            .iter()
            .map(|a| match ray_interval(&a.dir, x, r) {
                Some((lo, hi)) => a.weight * radial_mass(alpha, lo, hi),
                None => 0.0,
            })
            .sum(),
        SpectralMeasure::AngularDensity { density } => density_ball(density, alpha, x, nx, r),
    }
}

fn density_ball(dens: &AngularDensity, alpha: f64, x: &[f64], nx: f64, r: f64) -> f64 {
    // Directions θ = φ + δ with sin δ = sin a · sin τ, so the discriminant is r² cos² τ.
    let phi = angle(x);
    let sa = r / nx;
    let a = sa.asin();
    let gl = GaussLegendre::cached(8);
    let mut cuts: Vec<f64> = dens
        .boundaries_in(phi - a, phi + a)
        .into_iter()
        .map(|b| ((b - phi).sin() / sa).clamp(-1.0, 1.0).asin())
        .collect();
    cuts.insert(0, -PI / 2.0);
    cuts.push(PI / 2.0);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let delta_mid = (sa * mid.sin()).asin();
        let f = dens.value_at(phi + delta_mid);
        if f == 0.0 {
            continue;
        }
        let part = gl.integrate(w[0], w[1], |tau| {
            let (st, ct) = tau.sin_cos();
            let sd = sa * st;
            let cd = (1.0 - sd * sd).sqrt();
            let jac = sa * ct / cd;
            let b = nx * cd;
            let sq = r * ct;
            let hi = b + sq;
            if hi <= 0.0 || sq <= 0.0 {
                return 0.0;
            }
            let lo = (nx * nx - r * r) / hi;
            radial_mass(alpha, lo, hi) * jac
        });
        total += f * part;
    }
    total
}

/// ν(B(0, R)^c) = |μ| R^{−α} / α.
pub fn nu_tail(m: &ModelParams, big_r: f64) -> f64 {
    assert!(big_r > 0.0, "radius must be positive");
    m.mu().total_mass() * big_r.powf(-m.alpha()) / m.alpha()
}

const SHELLS: usize = 64;

/// ∫_{B(x, ρ)} |z − x|^{−a} ν(dz) by dyadic shells around `x`.
pub fn nu_singular_integral(m: &ModelParams, x: &[f64], rho: f64, a: f64) -> Result<f64> {
    assert_eq!(x.len(), m.d(), "point dimension mismatch");
    let nx = norm(x);
    let gamma = m.indices().gamma;
    if !(rho > 0.0 && rho < 0.5 * nx) {
        return Err(Error::DomainError(format!("need 0 < rho < |x|/2, got rho = {rho}, |x| = {nx}")));
    }
    if !(a > 0.0 && a < gamma) {
        return Err(Error::DomainError(format!("need 0 < a < gamma = {gamma}, got a = {a}")));
    }
    let alpha = m.alpha();
    let gl = GaussLegendre::cached(16);
    match m.mu() {
        SpectralMeasure::Atomic { atoms } => {
            let mut total = 0.0;
            for at in atoms {
                let b = dot(&at.dir, x);
                let h2 = (nx * nx - b * b).max(0.0);
                if b <= 0.0 || h2 >= rho * rho {
                    continue;
                }
                let f = |u: f64| (u * u + h2).powf(-0.5 * a) * (b + u).powf(-1.0 - alpha);
                let mut sum = 0.0;
                let mut t_hi = rho;
                let mut k = 0;
                while k < SHELLS && t_hi * t_hi > h2 {
                    let t_lo = 0.5 * t_hi;
                    let u_hi = (t_hi * t_hi - h2).sqrt();
                    let u_lo = (t_lo * t_lo - h2).max(0.0).sqrt();
                    sum += gl.integrate(u_lo, u_hi, f) + gl.integrate(-u_hi, -u_lo, f);
                    t_hi = t_lo;
                    k += 1;
                }
                if t_hi * t_hi > h2 {
                    // centre remainder, negligible at this depth
                    sum += 2.0 * t_hi.powf(1.0 - a) / (1.0 - a) * b.powf(-1.0 - alpha);
                }
                total += at.weight * sum;
            }
            Ok(total)
        }
        SpectralMeasure::AngularDensity { density } => {
            let gl8 = GaussLegendre::cached(8);
            let phix = angle(x);
            let mut total = 0.0;
            let mut t_hi = rho;
            for _ in 0..SHELLS {
                let t_lo = 0.5 * t_hi;
                for (t, wt) in gl8.mapped(t_lo, t_hi) {
                    total += wt * t.powf(1.0 - a) * circle_average(density, alpha, x, nx, phix, t, &gl8);
                }
                t_hi = t_lo;
            }
            total += TAU * density.value_at(phix) * nx.powf(-2.0 - alpha) * t_hi.powf(2.0 - a) / (2.0 - a);
            Ok(total)
        }
    }
}

/// ∫_0^{2π} f(θ(x + t e_φ)) |x + t e_φ|^{−2−α} dφ, split where the direction crosses a cell boundary.
fn circle_average(
    dens: &AngularDensity,
    alpha: f64,
    x: &[f64],
    nx: f64,
    phix: f64,
    t: f64,
    gl: &GaussLegendre,
) -> f64 {
    let half = (t / nx).asin();
    let mut cuts = vec![0.0, TAU];
    for beta in dens.boundaries_in(phix - half, phix + half) {
        let (sb, cb) = beta.sin_cos();
        let b = cb * x[0] + sb * x[1];
        let disc = b * b - nx * nx + t * t;
        if disc <= 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for lam in [b - sq, b + sq] {
            let z = [lam * cb - x[0], lam * sb - x[1]];
            cuts.push(angle(&z));
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut s = 0.0;
    for w in cuts.windows(2) {
        if w[1] - w[0] <= 1e-15 {
            continue;
        }
        s += gl.integrate(w[0], w[1], |ph| {
            let (sp, cp) = ph.sin_cos();
            let z = [x[0] + t * cp, x[1] + t * sp];
            let nz2 = z[0] * z[0] + z[1] * z[1];
            dens.value_at(angle(&z)) * nz2.powf(-1.0 - 0.5 * alpha)
        });
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialClass {
    /// C^{κ₀}_loc, κ₀ not an integer.
    Holder(f64),
    /// C^{κ₀−}_loc, κ₀ a positive integer.
    HolderMinus(f64),
    /// κ₀ ≤ 0: no regularity statement.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulusModel {
    Power,
    PowerLog,
    PowerLog2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaSource {
    Atomic,
    BoundedDensity,
    Fitted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessIndices {
    pub gamma: f64,
    pub gamma_source: GammaSource,
    /// Set when a fitted γ varied by more than 0.2 across probe directions.
    pub gamma_ambiguous: bool,
    pub kappa0: f64,
    pub kappa1: f64,
    pub potential_class: PotentialClass,
    /// Predicted harmonic-modulus exponent; `None` when κ₁ ≤ 0.
    pub rho: Option<f64>,
    pub modulus_model: ModulusModel,
}

fn is_integer(v: f64) -> bool {
    (v - v.round()).abs() < 1e-12
}

impl SmoothnessIndices {
    pub fn from_gamma(d: usize, alpha: f64, gamma: f64, source: GammaSource) -> Self {
        let df = d as f64;
        let kappa0 = gamma - (df - 2.0 * alpha);
        let kappa1 = kappa0 - alpha;
        let potential_class = if kappa0 <= 0.0 {
            PotentialClass::None
        } else if is_integer(kappa0) {
            PotentialClass::HolderMinus(kappa0)
        } else {
            PotentialClass::Holder(kappa0)
        };
        let (rho, modulus_model) = if alpha < 1.0 && !is_integer(alpha) {
            (kappa1, ModulusModel::Power)
        } else if is_integer(alpha) && alpha.round() == 1.0 {
            if gamma < df - 1e-12 {
                (kappa1, ModulusModel::PowerLog)
            } else {
                (1.0, ModulusModel::PowerLog2)
            }
        } else if (kappa1 - 1.0).abs() < 1e-12 {
            ((2.0 - alpha) / alpha, ModulusModel::PowerLog)
        } else {
            ((2.0 - alpha) / alpha * kappa1.min(1.0), ModulusModel::Power)
        };
        SmoothnessIndices {
            gamma,
            gamma_source: source,
            gamma_ambiguous: false,
            kappa0,
            kappa1,
            potential_class,
            rho: if kappa1 > 0.0 { Some(rho) } else { None },
            modulus_model,
        }
    }
}

/// γ and the derived indices: 1 for atomic μ, d for bounded density tables.
pub fn gamma_estimate(m: &ModelParams) -> SmoothnessIndices {
    match m.mu() {
        SpectralMeasure::Atomic { .. } => SmoothnessIndices::from_gamma(m.d(), m.alpha(), 1.0, GammaSource::Atomic),
        SpectralMeasure::AngularDensity { .. } => {
            SmoothnessIndices::from_gamma(m.d(), m.alpha(), m.d() as f64, GammaSource::BoundedDensity)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaFit {
    pub gamma: f64,
    pub min_slope: f64,
    pub max_slope: f64,
    pub probes_used: usize,
    pub ambiguous: bool,
}

/// Probe directions on the sphere: equispaced for d = 2, a Fibonacci lattice otherwise.
pub fn probe_directions(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        2 => (0..n).map(|k| {
            let th = TAU * k as f64 / n as f64;
            vec![th.cos(), th.sin()]
        }).collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
                    let rr = (1.0 - z * z).sqrt();
                    let ph = golden * k as f64;
                    vec![rr * ph.cos(), rr * ph.sin(), z]
                })
                .collect()
        }
        _ => panic!("probe directions implemented for d = 2, 3"),
    }
}

/// Empirical γ: minimum log-log slope of ν(B(θ, r)) over r = 2^{−3}…2^{−10}
/// across 32 probe directions, ignoring probes whose balls carry no mass.
pub fn fit_gamma(m: &ModelParams) -> Result<GammaFit> {
    let radii: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let mut slopes = Vec::new();
    for th in probe_directions(m.d(), 32) {
        let masses: Vec<f64> = radii.iter().map(|r| nu_ball(m, &th, *r)).collect();
        if masses.iter().any(|v| *v <= 0.0) {
            continue;
        }
        let lm: Vec<f64> = masses.iter().map(|v| v.ln()).collect();
        slopes.push(linear_fit(&lr, &lm).slope);
    }
    if slopes.is_empty() {
        return Err(Error::FitUnstable { r_squared: 0.0, detail: "no probe ball meets the support of mu".into() });
    }
    let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(GammaFit {
        gamma: lo.clamp(1.0, m.d() as f64),
        min_slope: lo,
        max_slope: hi,
        probes_used: slopes.len(),
        ambiguous: hi - lo > 0.2,
    })
}
