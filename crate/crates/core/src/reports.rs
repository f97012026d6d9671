//! End-to-end verification runs: a list of independent checks against
//! closed forms, identities and exponent bounds, written as JSON lines, a
//! summary document and CSV profiles.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::config::ModelConfig;
use crate::density::{decay_fit, density_grid, GridSpec};
use crate::error::{Error, Result};
use crate::harmonic::{
    boundary_decay_check, dynkin_apply, green_function, harmonic_holder_fit, harmonic_measure, isotropic_green,
    isotropic_poisson, BoundaryData, DecayKind, DecayReport, PoissonEstimator, PoissonQuad, ProfileSpec, TestFunction,
};
use crate::measure::{nu_ball, ModelParams, SmoothnessIndices, SpectralMeasure};
use crate::potential::{holder_exponent_fit, log_window, potential, potential_derivative, potential_fast};
use crate::rng::{derive_seed, replica_rng};
use crate::simulate::{expected_exit_time, isotropic_exit_time, Domain, SimScheme};
use crate::symbol::{c_alpha, char_exponent, phi_sphere_bounds};
use crate::vecops::norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Monte Carlo capped at 10⁴ paths, grids at N = 512, widened MC tolerances.
    Fast,
    Full,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            _ => Err(Error::InvalidParameter(format!("unknown suite {s:?} (fast | full)"))),
        }
    }
}

/// What a check compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    ClosedForm,
    ClassicalOracle,
    Identity,
    Bound,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub basis: Basis,
    pub predicted: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_s: f64,
    pub seed: u64,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedEntry {
    pub check: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub model: Option<ModelConfig>,
    pub suite: Suite,
    pub seed: u64,
    pub indices: Option<SmoothnessIndices>,
    pub checks: Vec<Check>,
    pub seeds: Vec<SeedEntry>,
    #[serde(skip)]
    pub profiles: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.pass).count()
    }

    /// `report.jsonl` (one check per line), `summary.json` and the CSV profiles.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut f = fs::File::create(dir.join("report.jsonl"))?;
        for c in &self.checks {
            writeln!(f, "{}", serde_json::to_string(c)?)?;
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            model: &'a Option<ModelConfig>,
            suite: Suite,
            seed: u64,
            indices: &'a Option<SmoothnessIndices>,
            checks: usize,
            passed: usize,
            all_pass: bool,
            failed: Vec<&'a str>,
            seeds: &'a [SeedEntry],
        }
        let s = Summary {
            model: &self.model,
            suite: self.suite,
            seed: self.seed,
            indices: &self.indices,
            checks: self.checks.len(),
            passed: self.passed(),
            all_pass: self.all_pass(),
            failed: self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect(),
            seeds: &self.seeds,
        };
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&s)? + "\n")?;
        for (name, body) in &self.profiles {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Result of one check body.
struct Outcome {
    predicted: f64,
    measured: f64,
    tolerance: f64,
    pass: bool,
    detail: String,
    profile: Option<(String, String)>,
}

impl Outcome {
    fn abs(predicted: f64, measured: f64, tolerance: f64) -> Self {
        Outcome { predicted, measured, tolerance, pass: (measured - predicted).abs() <= tolerance, detail: String::new(), profile: None }
    }

    fn rel(predicted: f64, measured: f64, tolerance: f64) -> Self {
        let mut o = Self::abs(predicted, measured, tolerance * predicted.abs());
        o.tolerance = tolerance;
        o.detail = format!("relative error {:.3e}", (measured - predicted).abs() / predicted.abs());
        o
    }

    fn at_least(bound: f64, measured: f64, tolerance: f64) -> Self {
        Outcome { predicted: bound, measured, tolerance, pass: measured >= bound - tolerance, detail: "one-sided: measured ≥ predicted − tolerance".into(), profile: None }
    }

    fn at_most(bound: f64, measured: f64, tolerance: f64) -> Self {
        Outcome { predicted: bound, measured, tolerance, pass: measured <= bound + tolerance, detail: "one-sided: measured ≤ predicted + tolerance".into(), profile: None }
    }

    /// `|measured − predicted| ≤ k σ`, reported with the tolerance in absolute units.
    fn sigma(predicted: f64, measured: f64, stderr: f64, k: f64) -> Self {
        let mut o = Self::abs(predicted, measured, k * stderr);
        o.detail = format!("{k} standard errors, stderr {stderr:.3e}");
        o
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        let d = d.into();
        self.detail = if self.detail.is_empty() { d } else { format!("{}; {d}", self.detail) };
        self
    }

    fn with_profile(mut self, name: &str, body: String) -> Self {
        self.profile = Some((name.to_string(), body));
        self
    }
}

type Body = Box<dyn Fn(&Ctx) -> Result<Outcome> + Send + Sync>;

struct Spec {
    name: &'static str,
    anchor: &'static str,
    basis: Basis,
    body: Body,
}

struct Ctx<'a> {
    m: &'a ModelParams,
    suite: Suite,
    seed: u64,
}

impl Ctx<'_> {
    fn full(&self) -> bool {
        self.suite == Suite::Full
    }

    fn n(&self, full: usize) -> usize {
        if self.full() {
            full
        } else {
            full.min(10_000)
        }
    }

    fn sigmas(&self) -> f64 {
        if self.full() {
            3.0
        } else {
            4.0
        }
    }

    /// Relative tolerance, doubled for the fast suite.
    fn widen(&self, tol: f64) -> f64 {
        if self.full() {
            tol
        } else {
            2.0 * tol
        }
    }

    fn scheme(&self) -> SimScheme {
        SimScheme::for_model(self.m, self.seed)
    }
}

/// Models with closed-form oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Known {
    /// Uniform μ: Φ(u) = λ|u|^α.
    Isotropic { lambda: f64 },
    /// Equal atoms on ±e_i: Φ(u) = c Σ|u_i|^α.
    Axes { c: f64 },
    Other,
}

fn classify(m: &ModelParams) -> Known {
    let alpha = m.alpha();
    match m.mu() {
        SpectralMeasure::AngularDensity { density } => {
            let v = density.values();
            if v.iter().all(|x| (x - v[0]).abs() <= 1e-12 * v[0].abs()) {
                let mass = m.mu().total_mass();
                let avg = gamma((alpha + 1.0) / 2.0) / (PI.sqrt() * gamma(alpha / 2.0 + 1.0));
                Known::Isotropic { lambda: mass * c_alpha(alpha) * avg }
            } else {
                Known::Other
            }
        }
        SpectralMeasure::Atomic { .. } => {
            let pairs = m.mu().pairs();
            let d = m.d();
            let on_axes = pairs.len() == d
                && pairs.iter().all(|p| p.dir.iter().filter(|c| c.abs() > 1e-12).count() == 1)
                && pairs.iter().all(|p| (p.weight - pairs[0].weight).abs() <= 1e-12 * pairs[0].weight);
            if on_axes {
                Known::Axes { c: c_alpha(alpha) * pairs[0].weight }
            } else {
                Known::Other
            }
        }
    }
}

/// A direction carrying spectral mass.
fn support_direction(m: &ModelParams) -> Vec<f64> {
    match m.mu() {
        SpectralMeasure::Atomic { .. } => m.mu().pairs()[0].dir.clone(),
        SpectralMeasure::AngularDensity { density } => {
            let (i, _) = density.values().iter().enumerate().fold((0, f64::MIN), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
            let t = density.center(i);
            vec![t.cos(), t.sin()]
        }
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:.12e}")).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

fn decay_outcome(r: &DecayReport, name: &str) -> Outcome {
    let rows = r.radii.iter().zip(&r.values).zip(&r.stderr).map(|((a, b), c)| vec![*a, *b, *c]);
    let o = if r.predicted < 0.0 && r.kind == DecayKind::PoissonFar {
        Outcome::at_most(r.predicted, r.slope, r.tolerance)
    } else {
        Outcome::at_least(r.predicted, r.slope, r.tolerance)
    };
    o.detail(format!("R² {:.4}", r.r_squared)).with_profile(name, csv("r,value,stderr", rows))
}

fn specs(m: &ModelParams) -> Vec<Spec> {
    let d = m.d();
    let alpha = m.alpha();
    let known = classify(m);
    let planar = d == 2;
    let idx = m.indices().clone();
    let mut v: Vec<Spec> = Vec::new();
    let mut add = |name: &'static str, anchor: &'static str, basis: Basis, body: Body| v.push(Spec { name, anchor, basis, body });

    add(
        "levy-homogeneity",
        "Lévy measure scaling ν(kB) = k^{-α} ν(B)",
        Basis::Identity,
        Box::new(|c| {
            let mut rng = replica_rng(c.seed, 0);
            let trials = if c.full() { 1000 } else { 200 };
            let d = c.m.d();
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
                let r = rng.random_range(0.05..0.95) * norm(&x);
                let k = 10f64.powf(rng.random_range(-2.0..2.0));
                let a = nu_ball(c.m, &x, r);
                let xk: Vec<f64> = x.iter().map(|v| k * v).collect();
                let b = nu_ball(c.m, &xk, k * r) * k.powf(c.m.alpha());
                if a > 0.0 {
                    worst = worst.max((a - b).abs() / a);
                }
            }
            Ok(Outcome::abs(0.0, worst, 1e-10).detail(format!("max relative error over {trials} balls")))
        }),
    );

    add(
        "symbol-nondegeneracy",
        "comparability of Φ with |u|^α on the sphere",
        Basis::Bound,
        Box::new(|c| {
            let (lo, hi) = phi_sphere_bounds(c.m, 256)?;
            Ok(Outcome { predicted: 0.0, measured: lo, tolerance: 0.0, pass: lo > 0.0, detail: format!("min {lo:.6e}, max {hi:.6e}"), profile: None })
        }),
    );

    add(
        "symbol-homogeneity",
        "α-homogeneity of the characteristic exponent",
        Basis::Identity,
        Box::new(|c| {
            let mut worst: f64 = 0.0;
            let d = c.m.d();
            let mut rng = replica_rng(c.seed, 1);
            for _ in 0..32 {
                let u: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                let k = rng.random_range(0.1..10.0);
                let uk: Vec<f64> = u.iter().map(|x| k * x).collect();
                let a = char_exponent(c.m, &u);
                worst = worst.max((char_exponent(c.m, &uk) - k.powf(c.m.alpha()) * a).abs() / (k.powf(c.m.alpha()) * a));
            }
            Ok(Outcome::abs(0.0, worst, 1e-12))
        }),
    );

    match known {
        Known::Isotropic { lambda } => add(
            "symbol-closed-form",
            "isotropic symbol Φ(u) = λ|u|^α",
            Basis::ClosedForm,
            Box::new(move |c| Ok(Outcome::rel(lambda * 2f64.powf(c.m.alpha()), char_exponent(c.m, &[2.0, 0.0]), 1e-8))),
        ),
        Known::Axes { c: coef } => add(
            "symbol-closed-form",
            "product symbol Φ(u) = c Σ|u_i|^α",
            Basis::ClosedForm,
            Box::new(move |c| {
                let d = c.m.d();
                Ok(Outcome::rel(coef * d as f64, char_exponent(c.m, &vec![1.0; d]), 1e-12))
            }),
        ),
        Known::Other => {}
    }

    if planar {
        let cauchy: Option<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>> = match known {
            Known::Isotropic { lambda } if alpha == 1.0 => {
                Some(Arc::new(move |x: &[f64]| lambda / (2.0 * PI * (lambda * lambda + x[0] * x[0] + x[1] * x[1]).powf(1.5))))
            }
            Known::Axes { c } if alpha == 1.0 => Some(Arc::new(move |x: &[f64]| x.iter().map(|u| c / (PI * (c * c + u * u))).product())),
            _ => None,
        };
        if let Some(exact) = cauchy {
            add(
                "density-closed-form",
                "Fourier inversion of exp(−Φ) against the Cauchy density",
                Basis::ClosedForm,
                Box::new(move |c| {
                    let g = if c.full() { GridSpec::new(64.0, 1024, 1.0) } else { GridSpec::new(32.0, 512, 1.0) };
                    let f = density_grid(c.m, &g, &[0, 0])?;
                    let rmax = g.accurate_radius();
                    let mut worst: f64 = 0.0;
                    for (i, val) in f.values.iter().enumerate() {
                        let x = f.point(i);
                        if norm(&x) <= rmax {
                            let e = exact(&x);
                            worst = worst.max((val - e).abs() / e);
                        }
                    }
                    Ok(Outcome::abs(0.0, worst, 1e-3).detail(format!("max relative error for |x| ≤ {rmax}, L = {}, N = {}", g.extent, g.points)))
                }),
            );
        }
        add(
            "density-mass",
            "p_t is a probability density",
            Basis::Identity,
            Box::new(|c| {
                let g = GridSpec::new(32.0, 512, 1.0).with_oversample(1);
                let f = density_grid(c.m, &g, &[0, 0])?;
                Ok(Outcome::abs(1.0, f.mass(), 1e-3).detail("plain periodic grid, L = 32, N = 512"))
            }),
        );
    }

    {
        let dir = support_direction(m);
        let gamma_ = idx.gamma;
        add(
            "density-decay",
            "decay |x|^{−α−γ} of p₁ along the support of μ",
            Basis::Bound,
            Box::new(move |c| {
                let fit = decay_fit(c.m, &dir, (5.0, 50.0), 12)?;
                let pred = -(c.m.alpha() + gamma_);
                let rows = fit.radii.iter().zip(&fit.values).map(|(r, v)| vec![*r, *v]);
                Ok(Outcome::abs(pred, fit.slope, 0.1)
                    .detail(format!("R² {:.5}", fit.r_squared))
                    .with_profile("density_decay.csv", csv("r,p1", rows)))
            }),
        );
    }
    if let Known::Axes { .. } = known {
        add(
            "density-decay-diagonal",
            "product decay |x|^{−2(1+α)} along the diagonal",
            Basis::ClosedForm,
            Box::new(|c| {
                let d = c.m.d();
                let fit = decay_fit(c.m, &vec![1.0; d], (5.0, 50.0), 12)?;
                Ok(Outcome::abs(-(d as f64) * (1.0 + c.m.alpha()), fit.slope, 0.15))
            }),
        );
    }

    if idx.kappa0 > 0.0 {
        add(
            "potential-scaling",
            "(α−d)-homogeneity of the potential kernel",
            Basis::Identity,
            Box::new(|c| {
                let d = c.m.d();
                let mut worst: f64 = 0.0;
                let mut rows = Vec::new();
                let mut rng = replica_rng(c.seed, 2);
                for _ in 0..4 {
                    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
                    let a = potential(c.m, &x)?;
                    let b = potential(c.m, &x2)? * 2f64.powf(d as f64 - c.m.alpha());
                    worst = worst.max((a - b).abs() / a);
                }
                let dir = support_direction(c.m);
                for r in log_window(0.5, 50.0, 32) {
                    let x: Vec<f64> = dir.iter().map(|v| r * v).collect();
                    rows.push(vec![r, potential(c.m, &x)?]);
                }
                Ok(Outcome::abs(0.0, worst, 1e-8).with_profile("potential_profile.csv", csv("r,V", rows)))
            }),
        );
        add(
            "potential-derivative-scaling",
            "homogeneity of D^β V of degree α − d − |β|",
            Basis::Identity,
            Box::new(|c| {
                let d = c.m.d();
                let mut beta = vec![0; d];
                beta[0] = 1;
                let x: Vec<f64> = (0..d).map(|i| 0.7 + 0.3 * i as f64).collect();
                let k: f64 = 3.0;
                let xk: Vec<f64> = x.iter().map(|v| k * v).collect();
                let a = potential_derivative(c.m, &x, &beta)?.value;
                let b = potential_derivative(c.m, &xk, &beta)?.value * k.powf(d as f64 + 1.0 - c.m.alpha());
                Ok(Outcome::abs(0.0, (a - b).abs() / a.abs(), 1e-6))
            }),
        );
        let riesz = move |lambda: f64, x: &[f64]| {
            let df = d as f64;
            gamma((df - alpha) / 2.0) / (2f64.powf(alpha) * PI.powf(df / 2.0) * gamma(alpha / 2.0)) * norm(x).powf(alpha - df) / lambda
        };
        match known {
            Known::Isotropic { lambda } => add(
                "potential-closed-form",
                "Riesz kernel for the isotropic model",
                Basis::ClosedForm,
                Box::new(move |c| Ok(Outcome::rel(riesz(lambda, &[2.0, 0.0]), potential(c.m, &[2.0, 0.0])?, 1e-3))),
            ),
            Known::Axes { c: coef } if alpha == 1.0 && planar => add(
                "potential-closed-form",
                "product Cauchy kernel 1/(2πc(|x₁|+|x₂|))",
                Basis::ClosedForm,
                Box::new(move |c| {
                    let mut rng = replica_rng(c.seed, 3);
                    let mut worst: f64 = 0.0;
                    for _ in 0..100 {
                        let x: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                        let e = 1.0 / (coef * 2.0 * PI * (x[0].abs() + x[1].abs()));
                        worst = worst.max((potential_fast(c.m, &x)? - e).abs() / e);
                    }
                    Ok(Outcome::abs(0.0, worst, 1e-3).detail("max relative error at 100 random points"))
                }),
            ),
            _ => {}
        }
        if m.mu().is_atomic() && planar && idx.kappa0 <= 1.0 + 1e-12 {
            let k0 = idx.kappa0;
            add(
                "potential-holder-sharpness",
                "sharpness of the Hölder class C^{κ₀} across an atom line",
                Basis::Bound,
                Box::new(move |c| {
                    let pairs = c.m.mu().pairs();
                    let xi = pairs.get(1).unwrap_or(&pairs[0]).dir.clone();
                    let perp = [-xi[1], xi[0]];
                    let integer = (k0 - k0.round()).abs() < 1e-12;
                    let fit = holder_exponent_fit(|x: &[f64]| potential_fast(c.m, x), &xi, &perp, &log_window(1e-4, 1e-2, 8), integer)?;
                    Ok(Outcome::abs(k0, fit.exponent, 0.05).detail(format!("R² {:.5}, model {:?}", fit.r_squared, fit.modulus_model)))
                }),
            );
        }
    }

    // Monte Carlo on the unit ball.
    let lambda_iso = match known {
        Known::Isotropic { lambda } => Some(lambda),
        _ => None,
    };
    if let Some(lambda) = lambda_iso {
        add(
            "exit-time-closed-form",
            "classical isotropic expected exit time of the ball",
            Basis::ClassicalOracle,
            Box::new(move |c| {
                let x0 = vec![0.0; c.m.d()];
                let e = expected_exit_time(c.m, &c.scheme(), &Domain::unit_ball(c.m.d()), &x0, c.n(100_000))?;
                Ok(Outcome::sigma(isotropic_exit_time(c.m.d(), c.m.alpha(), &x0) / lambda, e.estimate, e.stderr, c.sigmas()))
            }),
        );
    }
    add(
        "exit-time-scaling",
        "scaling of exit times E τ_{B(0,2)} = 2^α E τ_{B(0,1)}",
        Basis::Identity,
        Box::new(|c| {
            let d = c.m.d();
            let x0 = vec![0.0; d];
            let n = c.n(50_000);
            let one = expected_exit_time(c.m, &c.scheme(), &Domain::unit_ball(d), &x0, n)?;
            let two = expected_exit_time(c.m, &c.scheme().with_seed(derive_seed(c.seed, 1)), &Domain::ball(&x0, 2.0), &x0, n)?;
            let k = 2f64.powf(c.m.alpha());
            let se = (two.stderr.powi(2) + (k * one.stderr).powi(2)).sqrt();
            Ok(Outcome::sigma(k * one.estimate, two.estimate, se, c.sigmas()))
        }),
    );
    add(
        "exit-time-boundary-exponent",
        "exit-time bound s(x) ≤ c(1−|x|²)^{α/2}",
        Basis::Bound,
        Box::new(|c| {
            let mut p = ProfileSpec::default_for(DecayKind::ExitTime, c.m.d(), c.n(20_000));
            p.dir = support_direction(c.m);
            Ok(decay_outcome(&boundary_decay_check(c.m, &c.scheme(), DecayKind::ExitTime, &p)?, "exit_profile.csv"))
        }),
    );
    add(
        "harmonic-measure-symmetry",
        "symmetry of harmonic measure from the centre",
        Basis::Identity,
        Box::new(|c| {
            let ex = harmonic_measure(c.m, &c.scheme(), &vec![0.0; c.m.d()], c.n(100_000))?;
            let dir = support_direction(c.m);
            let e = ex.mass(|z| z.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() > 0.0);
            Ok(Outcome::sigma(0.5, e.estimate, e.stderr, c.sigmas()))
        }),
    );
    add(
        "dynkin-exit-time",
        "Dynkin operator of the exit time, U_r s = −1",
        Basis::Identity,
        Box::new(move |c| {
            let phi = match lambda_iso {
                Some(l) => {
                    let (d, a) = (c.m.d(), c.m.alpha());
                    TestFunction::Closed(Arc::new(move |y: &[f64]| isotropic_exit_time(d, a, y) / l))
                }
                None => TestFunction::ExitTime,
            };
            let mut x = vec![0.0; c.m.d()];
            x[0] = 0.1;
            let u = dynkin_apply(c.m, &c.scheme(), &phi, &x, 0.4, c.n(100_000))?;
            Ok(Outcome::rel(-1.0, u.estimate, c.widen(0.1)).detail(format!("stderr {:.3e}", u.stderr)))
        }),
    );
    add(
        "dynkin-harmonic-field",
        "Dynkin operator annihilates harmonic functions",
        Basis::Identity,
        Box::new(|c| {
            let mut x = vec![0.0; c.m.d()];
            x[0] = 0.1;
            x[1] = 0.1;
            let phi = TestFunction::HarmonicField(BoundaryData::HalfSpace { axis: 0, threshold: 0.3 });
            let u = dynkin_apply(c.m, &c.scheme(), &phi, &x, 0.3, c.n(100_000))?;
            Ok(Outcome::sigma(0.0, u.estimate, u.stderr, c.sigmas()))
        }),
    );
    if planar && idx.kappa0 > 0.0 {
        add(
            "dynkin-potential",
            "V(· − v) is harmonic away from v",
            Basis::Identity,
            Box::new(|c| {
                let mm = c.m.clone();
                let v = [1.2, 0.3];
                let phi = TestFunction::Closed(Arc::new(move |y: &[f64]| potential_fast(&mm, &[y[0] - v[0], y[1] - v[1]]).unwrap_or(f64::NAN)));
                let u = dynkin_apply(c.m, &c.scheme(), &phi, &[0.0, 0.0], 0.5, c.n(100_000))?;
                Ok(Outcome::sigma(0.0, u.estimate, u.stderr, c.sigmas()))
            }),
        );
        add(
            "green-symmetry",
            "symmetry G_B(x, v) = G_B(v, x)",
            Basis::Identity,
            Box::new(|c| {
                let n = c.n(100_000);
                let (x, v) = ([0.3, 0.0], [-0.2, 0.1]);
                let a = green_function(c.m, &c.scheme(), &x, &v, n)?;
                let b = green_function(c.m, &c.scheme().with_seed(derive_seed(c.seed, 1)), &v, &x, n)?;
                let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
                Ok(Outcome::sigma(0.0, a.estimate - b.estimate, se, c.sigmas()))
            }),
        );
        if let Some(lambda) = lambda_iso {
            add(
                "green-closed-form",
                "classical isotropic Green function of the ball",
                Basis::ClassicalOracle,
                Box::new(move |c| {
                    let (x, v) = ([0.0, 0.0], [0.5, 0.0]);
                    let g = green_function(c.m, &c.scheme(), &x, &v, c.n(1_000_000))?;
                    Ok(Outcome::rel(isotropic_green(c.m.alpha(), &x, &v) / lambda, g.estimate, c.widen(0.05)))
                }),
            );
        }
        add(
            "green-boundary-exponent",
            "Green function bound G_B(x, v) ≤ c(1−|v|)^{α/2}",
            Basis::Bound,
            Box::new(|c| {
                let mut p = ProfileSpec::default_for(DecayKind::Green, 2, c.n(100_000));
                p.dir = support_direction(c.m);
                Ok(decay_outcome(&boundary_decay_check(c.m, &c.scheme(), DecayKind::Green, &p)?, "green_profile.csv"))
            }),
        );
    }
    if planar && idx.kappa0 > 0.0 && idx.kappa1 > 0.0 {
        if lambda_iso.is_some() {
            add(
                "poisson-closed-form",
                "classical isotropic Poisson kernel of the ball",
                Basis::ClassicalOracle,
                Box::new(|c| {
                    let q = PoissonQuad { order: 8, n: c.n(20_000) };
                    let pe = PoissonEstimator::new(c.m, &c.scheme(), &[0.0, 0.0], &q)?;
                    let e = pe.estimate(&[2.0, 0.0])?;
                    Ok(Outcome::rel(isotropic_poisson(c.m.alpha(), &[0.0, 0.0], &[2.0, 0.0]), e.estimate, c.widen(0.1))
                        .detail(format!("stderr {:.3e}", e.stderr)))
                }),
            );
        }
        add(
            "poisson-normalization",
            "harmonic measure is a probability measure carried by the complement",
            Basis::Identity,
            Box::new(|c| {
                let q = PoissonQuad { order: 4, n: if c.full() { 20_000 } else { 2000 } };
                let pe = PoissonEstimator::new(c.m, &c.scheme(), &[0.0, 0.0], &q)?;
                let e = if c.full() { pe.normalization(6, 12)? } else { pe.normalization(4, 8)? };
                Ok(Outcome::abs(1.0, e.estimate, c.widen(0.05)).detail(format!("stderr {:.3e}", e.stderr)))
            }),
        );
        add(
            "poisson-boundary-exponent",
            "Poisson kernel bound P_B(x, z) ≤ c|z|^{−γ}(|z|²−1)^{−α/2}",
            Basis::Bound,
            Box::new(|c| {
                let mut p = ProfileSpec::default_for(DecayKind::PoissonBoundary, 2, c.n(100_000));
                p.dir = support_direction(c.m);
                Ok(decay_outcome(&boundary_decay_check(c.m, &c.scheme(), DecayKind::PoissonBoundary, &p)?, "poisson_boundary.csv"))
            }),
        );
        add(
            "poisson-far-exponent",
            "far-field decay of the Poisson kernel |z|^{−α−γ}",
            Basis::Bound,
            Box::new(|c| {
                let mut p = ProfileSpec::default_for(DecayKind::PoissonFar, 2, c.n(20_000));
                p.dir = support_direction(c.m);
                Ok(decay_outcome(&boundary_decay_check(c.m, &c.scheme(), DecayKind::PoissonFar, &p)?, "poisson_far.csv"))
            }),
        );
    }
    if let Some(rho) = idx.rho {
        add(
            "harmonic-holder-modulus",
            "Hölder modulus of bounded harmonic functions, exponent ρ",
            Basis::Bound,
            Box::new(move |c| {
                let d = c.m.d();
                let mut x0 = vec![0.0; d];
                x0[1] = 0.1;
                let mut dir = vec![0.0; d];
                dir[0] = 1.0;
                let g = BoundaryData::HalfSpace { axis: 0, threshold: 0.0 };
                // Fewer paths in the fast suite: start the window where increments clear the noise.
                let lo = if c.full() { 0.02 } else { 0.04 };
                let f = harmonic_holder_fit(c.m, &c.scheme(), &g, &x0, &dir, &log_window(lo, 0.3, 6), c.n(50_000))?;
                let rows = f.fit.increments.iter().zip(&f.stderr).map(|((h, v), s)| vec![*h, *v, *s]);
                Ok(Outcome::at_least(rho, f.fit.exponent, 0.1).with_profile("harmonic_increments.csv", csv("h,increment,stderr", rows)))
            }),
        );
    }
    v
}

fn run_spec(s: &Spec, m: &ModelParams, suite: Suite, seed: u64) -> (Check, Option<(String, String)>) {
    let t = Instant::now();
    let ctx = Ctx { m, suite, seed };
    let r = (s.body)(&ctx);
    let runtime_s = t.elapsed().as_secs_f64();
    let base = |pass, error| Check {
        name: s.name.to_string(),
        anchor: s.anchor.to_string(),
        basis: s.basis,
        predicted: f64::NAN,
        measured: f64::NAN,
        tolerance: f64::NAN,
        pass,
        runtime_s,
        seed,
        detail: String::new(),
        error,
    };
    match r {
        Ok(o) => {
            let c = Check { predicted: o.predicted, measured: o.measured, tolerance: o.tolerance, pass: o.pass, detail: o.detail, ..base(false, None) };
            (c, o.profile)
        }
        Err(e) => (base(false, Some(e.to_string())), None),
    }
}

/// All applicable checks for a validated model.
pub fn run_model(m: &ModelParams, model: Option<ModelConfig>, suite: Suite, seed: u64) -> ExperimentReport {
    let list = specs(m);
    let seeds: Vec<u64> = (0..list.len()).map(|i| derive_seed(seed, i as u64)).collect();
    let results: Vec<(Check, Option<(String, String)>)> =
        list.par_iter().zip(seeds.par_iter()).map(|(s, sd)| run_spec(s, m, suite, *sd)).collect();
    let mut checks = Vec::with_capacity(results.len());
    let mut profiles = Vec::new();
    for (c, p) in results {
        checks.push(c);
        profiles.extend(p);
    }
    let seeds = checks.iter().map(|c| SeedEntry { check: c.name.clone(), seed: c.seed }).collect();
    ExperimentReport { model, suite, seed, indices: Some(m.indices().clone()), checks, seeds, profiles }
}

fn validation_failure(model: Option<ModelConfig>, suite: Suite, seed: u64, e: &Error) -> ExperimentReport {
    let check = Check {
        name: "model-validation".into(),
        anchor: "finite symmetric nondegenerate spectral measure".into(),
        basis: Basis::Validation,
        predicted: f64::NAN,
        measured: f64::NAN,
        tolerance: f64::NAN,
        pass: false,
        runtime_s: 0.0,
        seed,
        detail: String::new(),
        error: Some(e.to_string()),
    };
    ExperimentReport { model, suite, seed, indices: None, checks: vec![check], seeds: Vec::new(), profiles: Vec::new() }
}

/// Run the suite for a model document; model errors become a failed validation check.
pub fn run_config(cfg: &ModelConfig, suite: Suite, seed: u64) -> ExperimentReport {
    match cfg.build() {
        Ok(m) => run_model(&m, Some(cfg.clone()), suite, seed),
        Err(e) => validation_failure(Some(cfg.clone()), suite, seed, &e),
    }
}

/// Load `config`, run the suite and, if `out` is given, write the artifacts there.
pub fn run_experiment(config: &Path, suite: Suite, seed: u64, out: Option<&Path>) -> Result<ExperimentReport> {
    let report = match ModelConfig::load(config) {
        Ok(cfg) => run_config(&cfg, suite, seed),
        Err(e) => validation_failure(None, suite, seed, &e),
    };
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecops::angle;

    #[test]
    fn classification() {
        let iso = crate::presets::isotropic_cauchy().unwrap();
        match classify(&iso) {
            Known::Isotropic { lambda } => assert!((lambda - 1.0).abs() < 1e-12),
            k => panic!("{k:?}"),
        }
        let p = crate::presets::product_cauchy(2).unwrap();
        match classify(&p) {
            Known::Axes { c } => assert!((c - 1.0).abs() < 1e-12),
            k => panic!("{k:?}"),
        }
        let iso8 = crate::presets::isotropic(2, 0.8, 1.0).unwrap();
        let Known::Isotropic { lambda } = classify(&iso8) else { panic!() };
        assert!((char_exponent(&iso8, &[0.6, 0.8]) - lambda).abs() < 1e-8 * lambda);
        assert_eq!(support_direction(&p), vec![1.0, 0.0]);
        assert!(angle(&support_direction(&iso)) < 1e-12);
    }

    #[test]
    fn degenerate_config_gives_single_failure() {
        let cfg = ModelConfig::atomic(2, 1.0, &[(vec![1.0, 0.0], 1.0)]);
        let r = run_config(&cfg, Suite::Fast, 7);
        assert_eq!(r.checks.len(), 1);
        assert!(!r.all_pass());
        assert!(r.checks[0].error.as_deref().unwrap().contains("degenerate"));
    }

    #[test]
    fn suite_parsing() {
        assert_eq!("fast".parse::<Suite>().unwrap(), Suite::Fast);
        assert!("slow".parse::<Suite>().is_err());
    }
}
