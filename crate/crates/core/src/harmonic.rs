//! Harmonic measure, Green function and Poisson kernel of the unit ball,
//! harmonic functions from boundary data, the Dynkin operator and the
//! boundary / regularity exponent fits built on them.
//!
//! Green and Poisson estimators work in d = 2, where V is available through
//! the direction table.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{ModelParams, SpectralMeasure};
use crate::potential::{fit_increments, potential_table, HolderFit, PotentialTable};
use crate::quadrature::{graded, GaussLegendre};
use crate::rng::derive_seed;
use crate::simulate::{simulate_exits, simulate_exits_from, simulate_exits_shared, Domain, ExitSample, SimScheme};
use crate::stats::{covariance, estimate_of, linear_fit, McEstimate, Moments};
use crate::vecops::{angle, dot, norm};

/// Green estimates with `|x − v|` below this are flagged as high variance.
pub const NEAR_DIAGONAL: f64 = 0.05;
/// Hölder fits need MC noise below this fraction of the smallest increment.
pub const NOISE_FRACTION: f64 = 0.3;
/// Quantile of `|D_i|` below which the control-variate coefficient is fitted.
const CV_TRIM: f64 = 0.99;
pub const MIN_INCREMENT: f64 = 0.02;

/// Exit sample from the unit ball together with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalExit {
    pub samples: Vec<ExitSample>,
    pub x0: Vec<f64>,
    pub domain: Domain,
    pub n: usize,
    pub seed: u64,
}

impl EmpiricalExit {
    /// Empirical ω(A) with its binomial standard error.
    pub fn mass<F: Fn(&[f64]) -> bool>(&self, set: F) -> McEstimate {
        let v: Vec<f64> = self.samples.iter().map(|e| if set(&e.x_exit) { 1.0 } else { 0.0 }).collect();
        estimate_of(&v)
    }

    pub fn mean_of<F: Fn(&[f64]) -> f64>(&self, f: F) -> McEstimate {
        let v: Vec<f64> = self.samples.iter().map(|e| f(&e.x_exit)).collect();
        estimate_of(&v)
    }

    pub fn exit_points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|e| e.x_exit.clone()).collect()
    }
}

fn inside_unit_ball(x: &[f64]) -> bool {
    dot(x, x) < 1.0
}

/// `n` exits from the unit ball started at `x0`.
pub fn harmonic_measure(m: &ModelParams, s: &SimScheme, x0: &[f64], n: usize) -> Result<EmpiricalExit> {
    if !inside_unit_ball(x0) {
        return Err(Error::DomainError("harmonic measure needs |x0| < 1".into()));
    }
    let domain = Domain::unit_ball(m.d());
    let samples = simulate_exits(m, s, &domain, x0, n)?;
    Ok(EmpiricalExit { samples, x0: x0.to_vec(), domain, n, seed: s.seed })
}

/// Bounded boundary data on the complement of the ball.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    /// Indicator of `{z : z[axis] > threshold}`.
    HalfSpace { axis: usize, threshold: f64 },
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Constant(c) => write!(f, "Constant({c})"),
            BoundaryData::HalfSpace { axis, threshold } => write!(f, "HalfSpace {{ axis: {axis}, threshold: {threshold} }}"),
            BoundaryData::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl BoundaryData {
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            BoundaryData::Constant(c) => *c,
            BoundaryData::HalfSpace { axis, threshold } => {
                if z[*axis] > *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            BoundaryData::Custom(f) => f(z),
        }
    }

    /// Upper bound of the data, where it is known.
    pub fn sup(&self) -> Option<f64> {
        match self {
            BoundaryData::Constant(c) => Some(*c),
            BoundaryData::HalfSpace { .. } => Some(1.0),
            BoundaryData::Custom(_) => None,
        }
    }
}

/// `u(x) = E^x g(X_τ)` for the unit ball; exact `g(x)` off the ball.
pub fn harmonic_eval(m: &ModelParams, s: &SimScheme, g: &BoundaryData, x: &[f64], n: usize) -> Result<McEstimate> {
    if !inside_unit_ball(x) {
        return Ok(McEstimate { estimate: g.eval(x), stderr: 0.0, n });
    }
    Ok(harmonic_measure(m, s, x, n)?.mean_of(|z| g.eval(z)))
}

fn require_planar(m: &ModelParams) -> Result<()> {
    if m.d() != 2 {
        return Err(Error::Unsupported("Green and Poisson estimators are implemented for d = 2".into()));
    }
    Ok(())
}

fn require_kappa0(m: &ModelParams) -> Result<()> {
    let k0 = m.indices().kappa0;
    if k0 <= 0.0 {
        return Err(Error::HypothesisViolated(format!("κ₀ = {k0:.4} ≤ 0: V is not locally bounded off the origin")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenValue {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
    /// `|x − v| < NEAR_DIAGONAL`: large cancellation, excluded from fits.
    pub near_diagonal: bool,
}

impl GreenValue {
    pub fn mc(&self) -> McEstimate {
        McEstimate { estimate: self.estimate, stderr: self.stderr, n: self.n }
    }
}

/// `G_B(x, ·) = V(· − x) − E^x V(· − X_τ)` from one shared exit sample.
pub struct GreenEstimator {
    alpha: f64,
    table: Arc<PotentialTable>,
    x: [f64; 2],
    exits: Vec<[f64; 2]>,
}

impl GreenEstimator {
    pub fn new(m: &ModelParams, s: &SimScheme, x: &[f64], n: usize) -> Result<Self> {
        require_planar(m)?;
        require_kappa0(m)?;
        let table = potential_table(m)?;
        let ex = harmonic_measure(m, s, x, n)?;
        let exits = ex.samples.iter().map(|e| [e.x_exit[0], e.x_exit[1]]).collect();
        Ok(GreenEstimator { alpha: m.alpha(), table, x: [x[0], x[1]], exits })
    }

    #[inline]
    fn v(&self, a: f64, b: f64) -> f64 {
        let r2 = a * a + b * b;
        r2.powf(0.5 * (self.alpha - 2.0)) * self.table.eval_angle_fast(b.atan2(a))
    }

    pub fn n(&self) -> usize {
        self.exits.len()
    }

    pub fn start(&self) -> [f64; 2] {
        self.x
    }

    /// Per-sample values `V(v − x) − V(v − X_i)`.
    fn samples_at(&self, v: &[f64]) -> Vec<f64> {
        let base = self.v(v[0] - self.x[0], v[1] - self.x[1]);
        self.exits.iter().map(|e| base - self.v(v[0] - e[0], v[1] - e[1])).collect()
    }

    pub fn estimate(&self, v: &[f64]) -> Result<GreenValue> {
        let gap = ((v[0] - self.x[0]).powi(2) + (v[1] - self.x[1]).powi(2)).sqrt();
        if gap == 0.0 {
            return Err(Error::DomainError("Green function is singular at x = v".into()));
        }
        let n = self.n();
        if !inside_unit_ball(v) {
            return Ok(GreenValue { estimate: 0.0, stderr: 0.0, n, near_diagonal: false });
        }
        let e = estimate_of(&self.samples_at(v));
        Ok(GreenValue { estimate: e.estimate, stderr: e.stderr, n, near_diagonal: gap < NEAR_DIAGONAL })
    }
}

/// Monte Carlo `G_B(x, v)` from `n` exits started at `x`.
pub fn green_function(m: &ModelParams, s: &SimScheme, x: &[f64], v: &[f64], n: usize) -> Result<GreenValue> {
    if !inside_unit_ball(x) {
        return Err(Error::DomainError("Green function needs |x| < 1".into()));
    }
    if !inside_unit_ball(v) {
        require_planar(m)?;
        require_kappa0(m)?;
        return Ok(GreenValue { estimate: 0.0, stderr: 0.0, n, near_diagonal: false });
    }
    GreenEstimator::new(m, s, x, n)?.estimate(v)
}

/// Classical Green function of the unit ball for the isotropic model with
/// Φ(u) = |u|^α in d = 2.
pub fn isotropic_green(alpha: f64, x: &[f64], v: &[f64]) -> f64 {
    use statrs::function::gamma::gamma;
    let d2: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    let w = (1.0 - dot(x, x)) * (1.0 - dot(v, v)) / d2;
    if w <= 0.0 {
        return 0.0;
    }
    let kappa = 1.0 / (2f64.powf(alpha) * PI * gamma(alpha / 2.0).powi(2));
    // ∫_0^w r^{α/2−1}/(r+1) dr with r = t^{2/α}.
    let q = 2.0 / alpha;
    let tmax = w.powf(alpha / 2.0);
    let g = GaussLegendre::cached(64);
    let inner = q * g.integrate(0.0, tmax.min(1.0), |t| 1.0 / (t.powf(q) + 1.0))
        + if tmax > 1.0 { q * g.integrate(1.0 / tmax, 1.0, |u| u.powf(q - 2.0) / (1.0 + u.powf(q))) } else { 0.0 };
    kappa * d2.powf(0.5 * (alpha - 2.0)) * inner
}

/// Classical Poisson kernel of the unit ball for the isotropic model in d = 2.
pub fn isotropic_poisson(alpha: f64, x: &[f64], z: &[f64]) -> f64 {
    let c = (PI * alpha / 2.0).sin() / PI.powi(2);
    let num = 1.0 - dot(x, x);
    let den = dot(z, z) - 1.0;
    let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    c * (num / den).powf(alpha / 2.0) / d2
}

/// Quadrature settings for the Ikeda–Watanabe integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonQuad {
    /// Gauss–Legendre points per graded half-interval.
    pub order: usize,
    /// Exit samples shared by all quadrature nodes.
    pub n: usize,
}

impl Default for PoissonQuad {
    fn default() -> Self {
        PoissonQuad { order: 8, n: 20_000 }
    }
}

/// Spectral directions and weights seen from `z`: atoms, or a density piecewise in angle.
enum RayMeasure {
    Atoms(Vec<([f64; 2], f64)>),
    Density { values: Vec<f64>, width: f64 },
}

impl RayMeasure {
    fn of(m: &ModelParams) -> Self {
        match m.mu() {
            SpectralMeasure::Atomic { atoms } => {
                RayMeasure::Atoms(atoms.iter().map(|a| ([a.dir[0], a.dir[1]], a.weight)).collect())
            }
            SpectralMeasure::AngularDensity { density } => {
                RayMeasure::Density { values: density.values().to_vec(), width: density.cell_width() }
            }
        }
    }
}

/// Chord `{s > 0 : |z − sθ| < 1}`.
fn chord(z: &[f64; 2], th: &[f64; 2]) -> Option<(f64, f64)> {
    let b = z[0] * th[0] + z[1] * th[1];
    let c = z[0] * z[0] + z[1] * z[1] - 1.0;
    let disc = b * b - c;
    if b <= 0.0 || disc <= 0.0 {
        return None;
    }
    let hi = b + disc.sqrt();
    Some((c / hi, hi))
}

/// Nodes `y = z − sθ ∈ B` with weights `s^{−1−α} ds μ(dθ)`.
fn ray_nodes(alpha: f64, x: &[f64; 2], z: &[f64; 2], th: [f64; 2], wth: f64, order: usize, out: &mut Vec<([f64; 2], f64)>) {
    let Some((s0, s1)) = chord(z, &th) else { return };
    let sc = ((z[0] - x[0]) * th[0] + (z[1] - x[1]) * th[1]).clamp(s0, s1);
    let mut pieces = Vec::new();
    let tiny = 1e-12 * (s1 - s0);
    if sc - s0 > tiny {
        pieces.push((s0, sc, 2.0, 3.0));
    }
    if s1 - sc > tiny {
        pieces.push((sc, s1, 3.0, 2.0));
    }
    for (a, b, qa, qb) in pieces {
        for (s, w) in graded(a, b, qa, qb, order) {
            out.push(([z[0] - s * th[0], z[1] - s * th[1]], wth * w * s.powf(-1.0 - alpha)));
        }
    }
}

fn ikeda_watanabe_nodes(alpha: f64, mu: &RayMeasure, x: &[f64; 2], z: &[f64; 2], order: usize) -> Vec<([f64; 2], f64)> {
    let mut out = Vec::new();
    match mu {
        RayMeasure::Atoms(atoms) => {
            for (dir, w) in atoms {
                ray_nodes(alpha, x, z, *dir, *w, order, &mut out);
            }
        }
        RayMeasure::Density { values, width } => {
            let tz = angle(z);
            let half = (1.0 / norm(z)).asin();
            let (lo, hi) = (tz - half, tz + half);
            let tx = angle(&[z[0] - x[0], z[1] - x[1]]);
            let tx = tz + (tx - tz + PI).rem_euclid(2.0 * PI) - PI;
            let nc = values.len() as i64;
            let cell = |t: f64| (((t / width).round() as i64).rem_euclid(nc)) as usize;
            let mut cuts = vec![(lo, 2.0)];
            let k0 = ((lo / width) - 0.5).floor() as i64 + 1;
            let k1 = ((hi / width) - 0.5).ceil() as i64 - 1;
            for k in k0..=k1 {
                let b = (k as f64 + 0.5) * width;
                if b > lo && b < hi && (values[cell(b - 1e-9)] - values[cell(b + 1e-9)]).abs() > 1e-12 * values[cell(b + 1e-9)].abs().max(1e-300) {
                    cuts.push((b, 1.0));
                }
            }
            if tx > lo && tx < hi {
                cuts.push((tx, (2.0f64).max(1.0 / alpha)));
            }
            cuts.push((hi, 2.0));
            cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in cuts.windows(2) {
                let ((a, qa), (b, qb)) = (w[0], w[1]);
                if b - a <= 1e-14 {
                    continue;
                }
                for (t, wt) in graded(a, b, qa, qb, order) {
                    let f = values[cell(t)];
                    if f > 0.0 {
                        ray_nodes(alpha, x, z, [t.cos(), t.sin()], wt * f, order, &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Poisson kernel `P_B(x, ·)` by the Ikeda–Watanabe integral of the Monte Carlo
/// Green function; every evaluation reuses the same exits from `x`.
pub struct PoissonEstimator {
    green: GreenEstimator,
    measure: RayMeasure,
    order: usize,
}

impl PoissonEstimator {
    pub fn new(m: &ModelParams, s: &SimScheme, x: &[f64], q: &PoissonQuad) -> Result<Self> {
        require_planar(m)?;
        let k1 = m.indices().kappa1;
        if k1 <= 0.0 {
            return Err(Error::HypothesisViolated(format!("κ₁ = {k1:.4} ≤ 0: Poisson kernel estimates do not apply")));
        }
        if q.order < 2 {
            return Err(Error::InvalidParameter("quadrature order must be at least 2".into()));
        }
        let green = GreenEstimator::new(m, s, x, q.n)?;
        Ok(PoissonEstimator { green, measure: RayMeasure::of(m), order: q.order })
    }

    /// Per-sample contributions `c_i` with mean `P_B(x, z)`.
    pub fn samples_at(&self, z: &[f64]) -> Result<Vec<f64>> {
        if inside_unit_ball(z) || dot(z, z) == 1.0 {
            return Err(Error::DomainError("Poisson kernel needs |z| > 1".into()));
        }
        let g = &self.green;
        let zz = [z[0], z[1]];
        let nodes = ikeda_watanabe_nodes(g.alpha, &self.measure, &g.x, &zz, self.order);
        let base: f64 = nodes.iter().map(|(y, w)| w * g.v(y[0] - g.x[0], y[1] - g.x[1])).sum();
        let vals: Vec<f64> = g
            .exits
            .par_iter()
            .map(|e| base - nodes.iter().map(|(y, w)| w * g.v(y[0] - e[0], y[1] - e[1])).sum::<f64>())
            .collect();
        Ok(vals)
    }

    /// Per-sample contributions after the control variate
    /// `V(z − x) − V(z − X_i)`, which has mean zero because `V(z − ·)` is
    /// harmonic in the ball. The coefficient is fitted by regression on the
    /// samples below the 99th percentile of `|D_i|`: for α ≤ d/2 the control
    /// variate has infinite variance and a fit on all samples is biased by
    /// the few exits landing next to `z`.
    pub fn controlled_samples_at(&self, z: &[f64]) -> Result<Vec<f64>> {
        let c = self.samples_at(z)?;
        let g = &self.green;
        let base = g.v(z[0] - g.x[0], z[1] - g.x[1]);
        let d: Vec<f64> = g.exits.iter().map(|e| base - g.v(z[0] - e[0], z[1] - e[1])).collect();
        let mut ad: Vec<f64> = d.iter().map(|x| x.abs()).collect();
        ad.sort_by(f64::total_cmp);
        let cut = ad[((ad.len() as f64 * CV_TRIM) as usize).min(ad.len() - 1)];
        let (ct, dt): (Vec<f64>, Vec<f64>) = c.iter().zip(&d).filter(|(_, x)| x.abs() <= cut).map(|(a, x)| (*a, *x)).unzip();
        let vd = covariance(&dt, &dt);
        let b = if vd > 0.0 && vd.is_finite() { covariance(&ct, &dt) / vd } else { 0.0 };
        Ok(c.iter().zip(&d).map(|(a, x)| a - b * x).collect())
    }

    pub fn estimate(&self, z: &[f64]) -> Result<McEstimate> {
        Ok(estimate_of(&self.controlled_samples_at(z)?))
    }

    /// `∫_{B^c} P_B(x, z) dz` on a radial-angular product rule.
    pub fn normalization(&self, n_radial: usize, n_angle: usize) -> Result<McEstimate> {
        let alpha = self.green.alpha;
        let g = GaussLegendre::cached(n_radial);
        let mut rule = Vec::new();
        // r ∈ (1, 2): r = 1 + u²;  r ∈ (2, ∞): r = 2 w^{−1/α}.
        for (u, w) in g.mapped(0.0, 1.0) {
            rule.push((1.0 + u * u, 2.0 * u * w));
        }
        for (v, w) in g.mapped(0.0, 1.0) {
            let r = 2.0 * v.powf(-1.0 / alpha);
            rule.push((r, w * r / (alpha * v)));
        }
        let mut total = vec![0.0; self.green.n()];
        for (r, wr) in rule {
            for k in 0..n_angle {
                let t = 2.0 * PI * (k as f64 + 0.5) / n_angle as f64;
                let c = self.controlled_samples_at(&[r * t.cos(), r * t.sin()])?;
                let wt = wr * r * 2.0 * PI / n_angle as f64;
                for (acc, ci) in total.iter_mut().zip(c) {
                    *acc += wt * ci;
                }
            }
        }
        Ok(estimate_of(&total))
    }
}

pub fn poisson_kernel(m: &ModelParams, s: &SimScheme, x: &[f64], z: &[f64], q: &PoissonQuad) -> Result<McEstimate> {
    if dot(z, z) <= 1.0 {
        return Err(Error::DomainError("Poisson kernel needs |z| > 1".into()));
    }
    PoissonEstimator::new(m, s, x, q)?.estimate(z)
}

/// Test functions for the Dynkin operator.
#[derive(Clone)]
pub enum TestFunction {
    Closed(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
    /// The harmonic extension of boundary data into the unit ball.
    HarmonicField(BoundaryData),
    /// `s(y) = E^y τ_B` of the unit ball.
    ExitTime,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Closed(_) => write!(f, "Closed(..)"),
            TestFunction::HarmonicField(g) => write!(f, "HarmonicField({g:?})"),
            TestFunction::ExitTime => write!(f, "ExitTime"),
        }
    }
}

/// One unbiased draw of φ at each point (a single unit-ball exit per point
/// for the Monte Carlo fields), and the `n`-path estimate of φ(x).
fn sample_test_function(
    m: &ModelParams,
    s: &SimScheme,
    phi: &TestFunction,
    points: &[Vec<f64>],
    x: &[f64],
    n: usize,
) -> Result<(Vec<f64>, McEstimate)> {
    match phi {
        TestFunction::Closed(f) => {
            let v = points.iter().map(|p| f(p)).collect();
            Ok((v, McEstimate { estimate: f(x), stderr: 0.0, n }))
        }
        TestFunction::HarmonicField(_) | TestFunction::ExitTime => {
            let ball = Domain::unit_ball(m.d());
            let score = |e: &ExitSample| match phi {
                TestFunction::HarmonicField(g) => g.eval(&e.x_exit),
                _ => e.tau,
            };
            let nested = simulate_exits_from(m, &s.with_seed(derive_seed(s.seed, 1)), &ball, points)?;
            let v = nested.iter().map(score).collect();
            let at_x = if inside_unit_ball(x) {
                let ex = simulate_exits(m, &s.with_seed(derive_seed(s.seed, 2)), &ball, x, n)?;
                estimate_of(&ex.iter().map(score).collect::<Vec<_>>())
            } else {
                let e = simulate_exits_from(m, s, &ball, &[x.to_vec()])?;
                McEstimate { estimate: score(&e[0]), stderr: 0.0, n }
            };
            Ok((v, at_x))
        }
    }
}

/// `U_r φ(x) = (E^x φ(X_{τ_{B(x,r)}}) − φ(x)) / E^x τ_{B(x,r)}` with a
/// delta-method standard error.
pub fn dynkin_apply(m: &ModelParams, s: &SimScheme, phi: &TestFunction, x: &[f64], r: f64, n: usize) -> Result<McEstimate> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("Dynkin radius must be positive".into()));
    }
    let ball = Domain::ball(x, r);
    let ex = simulate_exits(m, s, &ball, x, n)?;
    let points: Vec<Vec<f64>> = ex.iter().map(|e| e.x_exit.clone()).collect();
    let (num, phi_x) = sample_test_function(m, s, phi, &points, x, n)?;
    let taus: Vec<f64> = ex.iter().map(|e| e.tau).collect();
    let mut mn = Moments::default();
    let mut md = Moments::default();
    let mut cov = 0.0;
    for (a, b) in num.iter().zip(&taus) {
        mn.push(*a);
        md.push(*b);
    }
    for (a, b) in num.iter().zip(&taus) {
        cov += (a - mn.mean()) * (b - md.mean());
    }
    let nf = n as f64;
    cov /= (nf - 1.0) * nf;
    let a = mn.mean() - phi_x.estimate;
    let b = md.mean();
    let var_a = mn.variance() / nf + phi_x.stderr.powi(2);
    let var_b = md.variance() / nf;
    let var = var_a / (b * b) - 2.0 * a * cov / b.powi(3) + a * a * var_b / b.powi(4);
    Ok(McEstimate { estimate: a / b, stderr: var.max(0.0).sqrt(), n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicHolderFit {
    pub fit: HolderFit,
    /// Standard error of each increment, aligned with `fit.increments`.
    pub stderr: Vec<f64>,
    /// Predicted exponent ρ.
    pub rho: f64,
}

impl HarmonicHolderFit {
    pub fn meets_prediction(&self, tol: f64) -> bool {
        self.fit.exponent >= self.rho - tol
    }
}

/// Hölder fit of `u = E^· g(X_τ)` around `x0` with common random numbers:
/// the same noise paths drive the exits from every probe point.
pub fn harmonic_holder_fit(
    m: &ModelParams,
    s: &SimScheme,
    g: &BoundaryData,
    x0: &[f64],
    direction: &[f64],
    window: &[f64],
    n: usize,
) -> Result<HarmonicHolderFit> {
    let idx = m.indices();
    let rho = idx
        .rho
        .ok_or_else(|| Error::HypothesisViolated(format!("κ₁ = {:.4} ≤ 0: no harmonic modulus is predicted", idx.kappa1)))?;
    if window.iter().any(|h| *h < MIN_INCREMENT) {
        return Err(Error::InvalidParameter(format!("increments must be at least {MIN_INCREMENT}")));
    }
    let nd = norm(direction);
    let mut starts = vec![x0.to_vec()];
    for h in window {
        starts.push(x0.iter().zip(direction).map(|(a, b)| a + h * b / nd).collect());
    }
    if starts.iter().any(|p| norm(p) >= 0.5) {
        return Err(Error::DomainError("probe points must lie in B(0, 1/2)".into()));
    }
    let crn = s.for_common_noise();
    let paths = simulate_exits_shared(m, &crn, &Domain::unit_ball(m.d()), &starts, n)?;
    let mut inc = Vec::with_capacity(window.len());
    let mut se = Vec::with_capacity(window.len());
    for (k, h) in window.iter().enumerate() {
        let d: Vec<f64> = paths.iter().map(|p| g.eval(&p[k + 1].x_exit) - g.eval(&p[0].x_exit)).collect();
        let e = estimate_of(&d);
        inc.push((*h, e.estimate));
        se.push(e.stderr);
    }
    let smallest = inc.iter().map(|(_, v)| v.abs()).fold(f64::INFINITY, f64::min);
    let noise = se.iter().cloned().fold(0.0, f64::max);
    if !(noise <= NOISE_FRACTION * smallest) {
        return Err(Error::FitUnstable {
            r_squared: 0.0,
            detail: format!("Monte Carlo noise {noise:.3e} exceeds {NOISE_FRACTION} × smallest increment {smallest:.3e}"),
        });
    }
    let fit = fit_increments(&inc, false)?;
    Ok(HarmonicHolderFit { fit, stderr: se, rho })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayKind {
    /// `G_B(0, v)` against `1 − |v|`.
    Green,
    /// `P_B(0, z)|z|^γ` against `|z|² − 1`.
    PoissonBoundary,
    /// `P_B(0, z)` against `|z|` far from the ball.
    PoissonFar,
    /// `s(x) = E^x τ_B` against `1 − |x|²`.
    ExitTime,
}

/// Radii along `dir` and the Monte Carlo sample size per estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSpec {
    pub dir: Vec<f64>,
    pub radii: Vec<f64>,
    pub n: usize,
    pub quad_order: usize,
}

impl ProfileSpec {
    /// Default radii for each kind (log-spaced boundary gaps or radii).
    pub fn default_for(kind: DecayKind, d: usize, n: usize) -> Self {
        let mut dir = vec![0.0; d];
        dir[0] = 1.0;
        let geo = |a: f64, b: f64, k: usize| crate::potential::log_window(a, b, k);
        let radii = match kind {
            DecayKind::Green => geo(0.05, 0.3, 6).into_iter().map(|g| 1.0 - g).collect(),
            DecayKind::ExitTime => (0..6).map(|i| 0.7 + 0.05 * i as f64).collect(),
            DecayKind::PoissonBoundary => geo(0.01, 0.2, 6).into_iter().map(|g| 1.0 + g).collect(),
            DecayKind::PoissonFar => geo(3.0, 30.0, 6),
        };
        ProfileSpec { dir, radii, n, quad_order: PoissonQuad::default().order }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub kind: DecayKind,
    pub slope: f64,
    pub r_squared: f64,
    /// Predicted exponent of the bound.
    pub predicted: f64,
    pub tolerance: f64,
    /// One-sided: slope ≥ predicted − tol (boundary) or ≤ predicted + tol (far field).
    pub pass: bool,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Log-log slope of the named quantity along the profile, compared one-sidedly
/// with the exponent of the corresponding bound.
pub fn boundary_decay_check(m: &ModelParams, s: &SimScheme, kind: DecayKind, p: &ProfileSpec) -> Result<DecayReport> {
    let alpha = m.alpha();
    let gamma = m.indices().gamma;
    let nd = norm(&p.dir);
    let point = |r: f64| -> Vec<f64> { p.dir.iter().map(|c| r * c / nd).collect() };
    let origin = vec![0.0; m.d()];
    let mut est = Vec::with_capacity(p.radii.len());
    match kind {
        DecayKind::ExitTime => {
            let ball = Domain::unit_ball(m.d());
            for (k, r) in p.radii.iter().enumerate() {
                let ex = simulate_exits(m, &s.with_seed(derive_seed(s.seed, k as u64)), &ball, &point(*r), p.n)?;
                est.push(estimate_of(&ex.iter().map(|e| e.tau).collect::<Vec<_>>()));
            }
        }
        DecayKind::Green => {
            let g = GreenEstimator::new(m, s, &origin, p.n)?;
            for r in &p.radii {
                est.push(g.estimate(&point(*r))?.mc());
            }
        }
        DecayKind::PoissonBoundary | DecayKind::PoissonFar => {
            let q = PoissonQuad { order: p.quad_order, n: p.n };
            let pe = PoissonEstimator::new(m, s, &origin, &q)?;
            for r in &p.radii {
                est.push(pe.estimate(&point(*r))?);
            }
        }
    }
    let (xs, ys, predicted, tolerance, lower): (Vec<f64>, Vec<f64>, f64, f64, bool) = match kind {
        DecayKind::ExitTime => (
            p.radii.iter().map(|r| (1.0 - r * r).ln()).collect(),
            est.iter().map(|e| e.estimate.ln()).collect(),
            alpha / 2.0,
            0.1,
            true,
        ),
        DecayKind::Green => (
            p.radii.iter().map(|r| (1.0 - r).ln()).collect(),
            est.iter().map(|e| e.estimate.ln()).collect(),
            alpha / 2.0,
            0.1,
            true,
        ),
        DecayKind::PoissonBoundary => (
            p.radii.iter().map(|r| (r * r - 1.0).ln()).collect(),
            est.iter().zip(&p.radii).map(|(e, r)| (e.estimate * r.powf(gamma)).ln()).collect(),
            -alpha / 2.0,
            0.1,
            true,
        ),
        DecayKind::PoissonFar => (
            p.radii.iter().map(|r| r.ln()).collect(),
            est.iter().map(|e| e.estimate.ln()).collect(),
            -(alpha + gamma),
            0.15,
            false,
        ),
    };
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::FitUnstable { r_squared: 0.0, detail: format!("non-positive estimate in {kind:?} profile") });
    }
    let fit = linear_fit(&xs, &ys);
    let pass = if lower { fit.slope >= predicted - tolerance } else { fit.slope <= predicted + tolerance };
    Ok(DecayReport {
        kind,
        slope: fit.slope,
        r_squared: fit.r_squared,
        predicted,
        tolerance,
        pass,
        radii: p.radii.clone(),
        values: est.iter().map(|e| e.estimate).collect(),
        stderr: est.iter().map(|e| e.stderr).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn iso() -> (ModelParams, SimScheme) {
        (presets::isotropic_cauchy().unwrap(), SimScheme::jump_split(1e-3, 17))
    }

    #[test]
    fn classical_oracles() {
        assert!((isotropic_green(1.0, &[0.0, 0.0], &[0.5, 0.0]) - 2.0 / (3.0 * PI)).abs() < 1e-10);
        let p = isotropic_poisson(1.0, &[0.0, 0.0], &[2.0, 0.0]);
        assert!((p - 1.0 / (PI * PI) / 3f64.sqrt() / 4.0).abs() < 1e-15);
        // symmetry of the classical Green function
        let a = isotropic_green(1.3, &[0.3, 0.0], &[-0.2, 0.1]);
        let b = isotropic_green(1.3, &[-0.2, 0.1], &[0.3, 0.0]);
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn harmonic_measure_mass_and_symmetry() {
        let (m, s) = iso();
        let ex = harmonic_measure(&m, &s, &[0.0, 0.0], 4000).unwrap();
        assert_eq!(ex.mass(|_| true).estimate, 1.0);
        assert!(ex.mass(|z| z[0] > 0.0).z_score(0.5).abs() < 3.5);
        assert!(harmonic_measure(&m, &s, &[1.0, 0.0], 10).is_err());
    }

    #[test]
    fn harmonic_eval_constant_and_halfplane() {
        let (m, s) = iso();
        let one = harmonic_eval(&m, &s, &BoundaryData::Constant(1.0), &[0.2, 0.1], 500).unwrap();
        assert_eq!(one.estimate, 1.0);
        let half = harmonic_eval(&m, &s, &BoundaryData::HalfSpace { axis: 0, threshold: 0.0 }, &[0.0, 0.0], 4000).unwrap();
        assert!(half.z_score(0.5).abs() < 3.5);
        let off = harmonic_eval(&m, &s, &BoundaryData::HalfSpace { axis: 0, threshold: 0.0 }, &[2.0, 0.0], 10).unwrap();
        assert_eq!(off.estimate, 1.0);
    }

    #[test]
    fn green_structure() {
        let (m, s) = iso();
        let g = green_function(&m, &s, &[0.0, 0.0], &[0.5, 0.0], 20_000).unwrap();
        let exact = isotropic_green(1.0, &[0.0, 0.0], &[0.5, 0.0]);
        assert!((g.estimate - exact).abs() < 4.0 * g.stderr + 0.02 * exact, "{g:?} vs {exact}");
        let out = green_function(&m, &s, &[0.0, 0.0], &[1.5, 0.0], 10).unwrap();
        assert_eq!(out.estimate, 0.0);
        let near = green_function(&m, &s, &[0.0, 0.0], &[0.01, 0.0], 100).unwrap();
        assert!(near.near_diagonal);
        let bad = presets::axis_product(2, 0.4, 0.25).unwrap();
        assert!(matches!(green_function(&bad, &s, &[0.0, 0.0], &[0.5, 0.0], 10), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn poisson_against_isotropic_oracle() {
        let (m, s) = iso();
        let pe = PoissonEstimator::new(&m, &s, &[0.0, 0.0], &PoissonQuad { order: 8, n: 4000 }).unwrap();
        for z in [[2.0, 0.0], [0.0, -1.3], [4.0, 3.0]] {
            let e = pe.estimate(&z).unwrap();
            let exact = isotropic_poisson(1.0, &[0.0, 0.0], &z);
            assert!((e.estimate - exact).abs() < 4.0 * e.stderr + 0.03 * exact, "{z:?}: {e:?} vs {exact}");
        }
        let product = presets::product_cauchy(2).unwrap();
        assert!(matches!(
            PoissonEstimator::new(&product, &SimScheme::atomic_exact(1), &[0.0, 0.0], &PoissonQuad::default()),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn dynkin_of_closed_functions() {
        let (m, s) = iso();
        let exit = TestFunction::Closed(Arc::new(|y: &[f64]| crate::simulate::isotropic_exit_time(2, 1.0, y)));
        let u = dynkin_apply(&m, &s, &exit, &[0.1, 0.0], 0.4, 4000).unwrap();
        assert!((u.estimate + 1.0).abs() < 0.1, "{u:?}");
        let v = [1.2, 0.3];
        let pot = TestFunction::Closed(Arc::new(move |y: &[f64]| 1.0 / (2.0 * PI * ((y[0] - v[0]).powi(2) + (y[1] - v[1]).powi(2)).sqrt())));
        let h = dynkin_apply(&m, &s, &pot, &[0.0, 0.0], 0.5, 4000).unwrap();
        assert!(h.z_score(0.0).abs() < 3.5, "{h:?}");
    }

    #[test]
    fn holder_fit_guards() {
        let (m, s) = iso();
        let g = BoundaryData::HalfSpace { axis: 0, threshold: 0.0 };
        assert!(harmonic_holder_fit(&m, &s, &g, &[0.0, 0.0], &[1.0, 0.0], &[0.01, 0.1], 10).is_err());
        assert!(harmonic_holder_fit(&m, &s, &g, &[0.4, 0.0], &[1.0, 0.0], &[0.05, 0.2], 10).is_err());
        let product = presets::product_cauchy(2).unwrap();
        assert!(matches!(
            harmonic_holder_fit(&product, &SimScheme::atomic_exact(1), &g, &[0.0, 0.0], &[1.0, 0.0], &[0.05, 0.1, 0.2], 10),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn ikeda_watanabe_rule_with_exact_green() {
        let mu = RayMeasure::Density { values: vec![1.0 / (2.0 * PI); 64], width: 2.0 * PI / 64.0 };
        for x in [[0.0, 0.0], [0.3, -0.2]] {
            for z in [[1.01, 0.0], [1.2, 0.0], [0.0, 2.0], [-7.0, 7.0]] {
                let nodes = ikeda_watanabe_nodes(1.0, &mu, &x, &z, 8);
                let v: f64 = nodes.iter().map(|(y, w)| w * isotropic_green(1.0, &x, y)).sum();
                let exact = isotropic_poisson(1.0, &x, &z);
                assert!((v / exact - 1.0).abs() < 3e-3, "{x:?} {z:?}: {v} vs {exact}");
            }
        }
    }
}
