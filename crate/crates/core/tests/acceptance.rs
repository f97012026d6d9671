//! Acceptance criteria, one test per criterion.
//!
//! Every test prints `PASS`/`FAIL` lines of the form
//! `AC-NN <name>: <measured> vs <target> (<runtime> / <budget>)` and asserts at the end.
//! Run with `cargo test --release --test acceptance -- --nocapture`.
//! Tests hold a shared lock so runtimes are not inflated by each other.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use anistable::density::{decay_fit, density_grid, GridSpec};
use anistable::harmonic::{
    boundary_decay_check, dynkin_apply, green_function, harmonic_holder_fit, BoundaryData, DecayKind, PoissonEstimator,
    PoissonQuad, ProfileSpec, TestFunction,
};
use anistable::measure::{nu_ball, nu_tail, RawSpectral};
use anistable::potential::{holder_exponent_fit, log_window, potential, potential_derivative, potential_fast};
use anistable::presets;
use anistable::simulate::{expected_exit_time, Domain, SimScheme};
use anistable::symbol::char_exponent;
use anistable::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

struct Criterion {
    id: u32,
    budget: Duration,
    start: Instant,
    lines: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: u32, budget_s: u64) -> Self {
        Criterion { id, budget: Duration::from_secs(budget_s), start: Instant::now(), lines: Vec::new() }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        let line = format!("AC-{:02} {name}: {detail}", self.id);
        println!("{} {line}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((pass, line));
    }

    fn finish(mut self) {
        let t = self.start.elapsed();
        let ok = t <= self.budget;
        self.check("runtime", ok, format!("{:.2} s (budget {} s)", t.as_secs_f64(), self.budget.as_secs()));
        let failed: Vec<&str> = self.lines.iter().filter(|l| !l.0).map(|l| l.1.as_str()).collect();
        assert!(failed.is_empty(), "failed: {failed:#?}");
    }
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn atomic(alpha: f64, atoms: &[([f64; 2], f64)]) -> ModelParams {
    let raw = RawSpectral::Atomic(atoms.iter().map(|(d, w)| (d.to_vec(), *w)).collect());
    ModelParams::from_raw(2, alpha, &raw).unwrap()
}

/// Atoms at 0, π/3 and 1 rad with unequal weights, symmetrized.
fn skewed(alpha: f64) -> ModelParams {
    let mut atoms = Vec::new();
    for (t, w) in [(0.0f64, 0.7), (PI / 3.0, 0.2), (1.0, 0.45)] {
        atoms.push(([t.cos(), t.sin()], w));
        atoms.push(([-t.cos(), -t.sin()], w));
    }
    atomic(alpha, &atoms)
}

fn isotropic_riesz(alpha: f64, r: f64, lambda: f64) -> f64 {
    // d = 2: Γ(1 − α/2) / (2^α π Γ(α/2)) r^{α−2}, divided by the symbol constant.
    let g = |x: f64| statrs::function::gamma::gamma(x);
    g(1.0 - alpha / 2.0) / (2f64.powf(alpha) * PI * g(alpha / 2.0)) * r.powf(alpha - 2.0) / lambda
}

#[test]
fn ac01_levy_measure_homogeneity() {
    let _g = lock();
    let mut c = Criterion::new(1, 1);
    let models = [("product-cauchy", presets::product_cauchy(2).unwrap()), ("axes-1.5", presets::axis_product(2, 1.5, 0.25).unwrap()), ("skewed-0.7", skewed(0.7))];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, m) in &models {
        let mut worst: f64 = 0.0;
        let mut nonzero = 0;
        for _ in 0..1000 {
            let x: [f64; 2] = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let nx = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let r = rng.random_range(0.05..0.95) * nx;
            let k = 10f64.powf(rng.random_range(-3.0..3.0));
            let a = nu_ball(m, &x, r);
            let b = nu_ball(m, &[k * x[0], k * x[1]], k * r) * k.powf(m.alpha());
            if a > 0.0 {
                nonzero += 1;
                worst = worst.max(rel(b, a));
            } else {
                worst = worst.max(b.abs());
            }
        }
        c.check(&format!("nu(kB)·k^α = nu(B) [{name}]"), worst <= 1e-10 && nonzero > 50, format!("max rel err {worst:.2e} ≤ 1e-10 over 1000 balls ({nonzero} hit the support)"));
    }
    c.finish();
}

#[test]
fn ac02_tail_mass() {
    let _g = lock();
    let mut c = Criterion::new(2, 1);
    let cases: Vec<(&str, ModelParams, f64)> = vec![
        ("product-cauchy", presets::product_cauchy(2).unwrap(), 4.0 / PI),
        ("skewed-0.7", skewed(0.7), 2.0 * (0.7 + 0.2 + 0.45)),
        ("isotropic-1.3", presets::isotropic(2, 1.3, 2.5).unwrap(), 2.5),
    ];
    for (name, m, mass) in &cases {
        let a = m.alpha();
        let worst = log_window(1e-4, 1e4, 33).into_iter().map(|r| rel(nu_tail(m, r), mass * r.powf(-a) / a)).fold(0.0, f64::max);
        c.check(&format!("nu_tail(R) = |μ| R^-α / α [{name}]"), worst <= 1e-12, format!("max rel err {worst:.2e} ≤ 1e-12 over R ∈ [1e-4, 1e4]"));
    }
    c.finish();
}

#[test]
fn ac03_symbol_oracles() {
    let _g = lock();
    let mut c = Criterion::new(3, 1);
    let iso = presets::isotropic(2, 1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let u = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        worst = worst.max(rel(char_exponent(&iso, &u), (u[0] * u[0] + u[1] * u[1]).sqrt()));
    }
    c.check("isotropic unit mass, α = 1: Φ(u) = |u|", worst <= 1e-8, format!("max rel err {worst:.2e} ≤ 1e-8 at 200 frequencies"));
    let p = presets::product_cauchy(2).unwrap();
    let v = char_exponent(&p, &[1.0, 1.0]);
    c.check("product weights 1/π: Φ((1,1)) = 2", (v - 2.0).abs() <= 1e-12, format!("Φ = {v:.15}, err {:.2e} ≤ 1e-12", (v - 2.0).abs()));
    c.finish();
}

#[test]
fn ac04_density_closed_forms() {
    let _g = lock();
    let mut c = Criterion::new(4, 30);
    let g = GridSpec::new(64.0, 1024, 1.0);
    let iso_exact = |x: &[f64]| 1.0 / (2.0 * PI * (1.0 + x[0] * x[0] + x[1] * x[1]).powf(1.5));
    let prod_exact = |x: &[f64]| 1.0 / (PI * PI * (1.0 + x[0] * x[0]) * (1.0 + x[1] * x[1]));
    let cases: [(&str, ModelParams, &dyn Fn(&[f64]) -> f64); 2] =
        [("isotropic Cauchy", presets::isotropic_cauchy().unwrap(), &iso_exact), ("product Cauchy", presets::product_cauchy(2).unwrap(), &prod_exact)];
    for (name, m, exact) in cases {
        let f = density_grid(&m, &g, &[0, 0]).unwrap();
        let mut worst: f64 = 0.0;
        for (i, v) in f.values.iter().enumerate() {
            let x = f.point(i);
            if x[0] * x[0] + x[1] * x[1] <= 256.0 {
                worst = worst.max(rel(*v, exact(&x)));
            }
        }
        c.check(&format!("p₁ vs closed form [{name}]"), worst <= 1e-3, format!("max rel err {worst:.2e} ≤ 1e-3 for |x| ≤ 16, L = 64, N = 1024"));
    }
    c.finish();
}

#[test]
fn ac05_decay_exponents() {
    let _g = lock();
    let mut c = Criterion::new(5, 60);
    let p = presets::product_cauchy(2).unwrap();
    let iso = presets::isotropic_cauchy().unwrap();
    let cases = [("product along e₁", &p, [1.0, 0.0], -2.0, 0.1), ("product along diagonal", &p, [1.0, 1.0], -4.0, 0.15), ("isotropic", &iso, [1.0, 0.0], -3.0, 0.1)];
    for (name, m, dir, target, tol) in cases {
        let f = decay_fit(m, &dir, (5.0, 50.0), 16).unwrap();
        c.check(&format!("log-log slope of p₁ [{name}]"), (f.slope - target).abs() <= tol, format!("slope {:.4} vs {target} ± {tol} (R² {:.5})", f.slope, f.r_squared));
    }
    c.finish();
}

#[test]
fn ac06_potential_kernel() {
    let _g = lock();
    let mut c = Criterion::new(6, 60);
    let iso = presets::isotropic_cauchy().unwrap();
    let v = potential(&iso, &[2.0, 0.0]).unwrap();
    let target = 1.0 / (4.0 * PI);
    c.check("isotropic V((2,0)) = 1/(4π)", rel(v, target) <= 1e-3, format!("V = {v:.8}, rel err {:.2e} ≤ 1e-3", rel(v, target)));
    let iso13 = presets::isotropic(2, 1.3, 1.0).unwrap();
    let lambda = char_exponent(&iso13, &[1.0, 0.0]);
    let v13 = potential(&iso13, &[0.6, -1.1]).unwrap();
    let t13 = isotropic_riesz(1.3, (0.36f64 + 1.21).sqrt(), lambda);
    c.check("isotropic α = 1.3 Riesz kernel", rel(v13, t13) <= 1e-3, format!("rel err {:.2e} ≤ 1e-3", rel(v13, t13)));

    let p = presets::product_cauchy(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x: [f64; 2] = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let exact = 1.0 / (2.0 * PI * (x[0].abs() + x[1].abs()));
        worst = worst.max(rel(potential(&p, &x).unwrap(), exact));
    }
    c.check("product V(x) = 1/(2π(|x₁|+|x₂|))", worst <= 1e-3, format!("max rel err {worst:.2e} ≤ 1e-3 at 100 random points"));

    let mut worst_s: f64 = 0.0;
    for m in [&iso, &p, &iso13, &skewed(0.7)] {
        for _ in 0..10 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let a = potential(m, &x).unwrap();
            let b = potential(m, &[2.0 * x[0], 2.0 * x[1]]).unwrap() * 2f64.powf(2.0 - m.alpha());
            worst_s = worst_s.max(rel(b, a));
        }
    }
    c.check("V(2x)·2^(d−α) = V(x)", worst_s <= 1e-8, format!("max rel err {worst_s:.2e} ≤ 1e-8 over 4 models"));
    c.finish();
}

#[test]
fn ac07_product_sharpness() {
    let _g = lock();
    let mut c = Criterion::new(7, 30);
    let p = presets::product_cauchy(2).unwrap();
    let fit = holder_exponent_fit(|x: &[f64]| potential(&p, x), &[0.0, 1.0], &[1.0, 0.0], &log_window(1e-4, 1e-2, 8), true).unwrap();
    c.check("Hölder fit across the axis at (0,1)", (fit.exponent - 1.0).abs() <= 0.05, format!("exponent {:.4} vs 1.00 ± 0.05 (R² {:.5})", fit.exponent, fit.r_squared));
    // Exact increment 1/(2π)(1/(1+h) − 1).
    let inc = potential(&p, &[1e-3, 1.0]).unwrap() - potential(&p, &[0.0, 1.0]).unwrap();
    let exact = (1.0 / (1.0 + 1e-3) - 1.0) / (2.0 * PI);
    c.check("increment across the axis", rel(inc, exact) <= 1e-3, format!("rel err {:.2e} ≤ 1e-3", rel(inc, exact)));

    let mut worst: f64 = 0.0;
    for (m, x) in [(&p, [0.7, 1.3]), (&p, [-1.1, 0.4]), (&skewed(1.4), [0.3, 1.2])] {
        for beta in [[1, 0], [0, 1], [1, 1]] {
            for k in [0.5, 3.0] {
                let a = potential_derivative(m, &x, &beta).unwrap().value;
                let order = (beta[0] + beta[1]) as f64;
                let b = potential_derivative(m, &[k * x[0], k * x[1]], &beta).unwrap().value * k.powf(2.0 + order - m.alpha());
                worst = worst.max(rel(b, a));
            }
        }
    }
    c.check("D^β V(kx) = k^(α−d−|β|) D^β V(x)", worst <= 1e-6, format!("max rel err {worst:.2e} ≤ 1e-6"));
    c.finish();
}

#[test]
fn ac08_exit_time() {
    let _g = lock();
    let mut c = Criterion::new(8, 300);
    let m = presets::isotropic_cauchy().unwrap();
    let s = SimScheme::for_model(&m, 8);
    let e = expected_exit_time(&m, &s, &Domain::unit_ball(2), &[0.0, 0.0], 100_000).unwrap();
    let z = (e.estimate - 2.0 / PI) / e.stderr;
    c.check("E⁰τ_B = 2/π", z.abs() <= 3.0, format!("{:.5} ± {:.1e} vs {:.5}, z = {z:.2}", e.estimate, e.stderr, 2.0 / PI));
    let r = boundary_decay_check(&m, &s, DecayKind::ExitTime, &ProfileSpec::default_for(DecayKind::ExitTime, 2, 20_000)).unwrap();
    c.check("boundary exponent of s", r.slope >= 0.5 - 0.1, format!("slope {:.4} ≥ α/2 − 0.1 = 0.4 (R² {:.4})", r.slope, r.r_squared));
    c.finish();
}

#[test]
fn ac09_dynkin_operator() {
    let _g = lock();
    let mut c = Criterion::new(9, 300);
    let m = presets::isotropic_cauchy().unwrap();
    let s = SimScheme::for_model(&m, 9);
    let n = 100_000;
    let u = TestFunction::HarmonicField(BoundaryData::HalfSpace { axis: 0, threshold: 0.3 });
    let e = dynkin_apply(&m, &s, &u, &[0.1, 0.1], 0.3, n).unwrap();
    c.check("U_r u = 0 for u harmonic in B", e.estimate.abs() <= 3.0 * e.stderr, format!("{:.4e} ± {:.2e} (3σ)", e.estimate, e.stderr));

    // Closed-form exit time of the unit ball for the isotropic Cauchy process, x ↦ 2/π (1 − |x|²)^{1/2}.
    let ex = TestFunction::Closed(std::sync::Arc::new(|y: &[f64]| 2.0 / PI * (1.0 - y[0] * y[0] - y[1] * y[1]).max(0.0).sqrt()));
    let e = dynkin_apply(&m, &s.with_seed(91), &ex, &[0.1, 0.0], 0.4, n).unwrap();
    c.check("U_r s = −1", (e.estimate + 1.0).abs() <= 0.1, format!("{:.4} ± {:.1e} vs −1 ± 10%", e.estimate, e.stderr));

    let p = presets::product_cauchy(2).unwrap();
    let pm = p.clone();
    let vf = TestFunction::Closed(std::sync::Arc::new(move |y: &[f64]| potential_fast(&pm, &[y[0] - 1.2, y[1] - 0.3]).unwrap()));
    let e = dynkin_apply(&p, &SimScheme::for_model(&p, 92), &vf, &[0.0, 0.0], 0.5, n).unwrap();
    c.check("U_r V(· − v) = 0 away from v [product]", e.estimate.abs() <= 3.0 * e.stderr, format!("{:.4e} ± {:.2e} (3σ)", e.estimate, e.stderr));
    c.finish();
}

#[test]
fn ac10_green_function() {
    let _g = lock();
    let mut c = Criterion::new(10, 600);
    let p = presets::product_cauchy(2).unwrap();
    let s = SimScheme::for_model(&p, 10);
    let (x, v) = ([0.3, 0.0], [-0.2, 0.1]);
    let a = green_function(&p, &s, &x, &v, 100_000).unwrap();
    let b = green_function(&p, &s.with_seed(101), &v, &x, 100_000).unwrap();
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    c.check("G(x,v) = G(v,x) [product]", (a.estimate - b.estimate).abs() <= 3.0 * se, format!("{:.5} vs {:.5}, diff {:.2e} ≤ 3σ = {:.2e}", a.estimate, b.estimate, a.estimate - b.estimate, 3.0 * se));

    let m = presets::isotropic_cauchy().unwrap();
    let g = green_function(&m, &SimScheme::for_model(&m, 102), &[0.0, 0.0], &[0.5, 0.0], 1_000_000).unwrap();
    // κ |v|^{-1} ∫₀³ r^{-1/2} (1+r)^{-1} dr with κ = 1/(2π²) and the integral 2 atan √3.
    let oracle = 1.0 / (2.0 * PI * PI) * 2.0 * 2.0 * 3f64.sqrt().atan();
    c.check("isotropic G(0, (0.5,0)) vs classical oracle", rel(g.estimate, oracle) <= 0.05, format!("{:.5} ± {:.1e} vs {:.5}, rel err {:.2e} ≤ 5%", g.estimate, g.stderr, oracle, rel(g.estimate, oracle)));
    c.finish();
}

#[test]
fn ac11_poisson_kernel() {
    let _g = lock();
    let mut c = Criterion::new(11, 600);
    let m = presets::isotropic_cauchy().unwrap();
    let s = SimScheme::for_model(&m, 11);
    let pe = PoissonEstimator::new(&m, &s, &[0.0, 0.0], &PoissonQuad { order: 8, n: 20_000 }).unwrap();
    let e = pe.estimate(&[2.0, 0.0]).unwrap();
    let oracle = 1.0 / (PI * PI) / 3f64.sqrt() / 4.0;
    c.check("isotropic P(0, (2,0))", rel(e.estimate, oracle) <= 0.1, format!("{:.6} ± {:.1e} vs {oracle:.6}, rel err {:.2e} ≤ 10%", e.estimate, e.stderr, rel(e.estimate, oracle)));

    let pn = PoissonEstimator::new(&m, &s.with_seed(111), &[0.0, 0.0], &PoissonQuad { order: 4, n: 20_000 }).unwrap();
    let norm = pn.normalization(6, 12).unwrap();
    c.check("∫ P(0, z) dz = 1", (norm.estimate - 1.0).abs() <= 0.05, format!("{:.4} ± {:.1e} vs 1 ± 0.05", norm.estimate, norm.stderr));

    let sb = s.with_seed(112);
    let b = boundary_decay_check(&m, &sb, DecayKind::PoissonBoundary, &ProfileSpec::default_for(DecayKind::PoissonBoundary, 2, 100_000)).unwrap();
    c.check("boundary exponent", b.slope >= -0.5 - 0.1, format!("slope {:.4} ≥ −α/2 − 0.1 = −0.6 over 1.01 < |z| < 1.2", b.slope));
    let f = boundary_decay_check(&m, &s.with_seed(113), DecayKind::PoissonFar, &ProfileSpec::default_for(DecayKind::PoissonFar, 2, 20_000)).unwrap();
    c.check("far-field exponent [isotropic]", f.slope <= -3.0 + 0.15, format!("slope {:.4} ≤ −(α+γ) + 0.15 = −2.85 over 3 < |z| < 30", f.slope));

    let a = presets::axis_product(2, 1.2, 0.25).unwrap();
    let sa = SimScheme::for_model(&a, 114);
    let fa = boundary_decay_check(&a, &sa, DecayKind::PoissonFar, &ProfileSpec::default_for(DecayKind::PoissonFar, 2, 20_000)).unwrap();
    let target = -(1.2 + 1.0);
    c.check("far-field exponent [axes, α = 1.2]", fa.slope <= target + 0.15, format!("slope {:.4} ≤ {:.2} along e₁", fa.slope, target + 0.15));
    c.finish();
}

#[test]
fn ac12_harmonic_modulus() {
    let _g = lock();
    let g = BoundaryData::HalfSpace { axis: 0, threshold: 0.0 };
    let window = log_window(0.02, 0.3, 6);
    let cases = [
        ("atoms ±e₁, ±e₂, α = 1.5", presets::axis_product(2, 1.5, 0.25).unwrap(), SimScheme::atomic_exact(12), 1.0 / 6.0),
        ("isotropic density, α = 0.8", presets::isotropic(2, 0.8, 1.0).unwrap(), SimScheme::jump_split(1e-3, 12), 0.8),
    ];
    for (name, m, s, rho) in cases {
        let mut c = Criterion::new(12, 600);
        let f = harmonic_holder_fit(&m, &s, &g, &[0.0, 0.1], &[1.0, 0.0], &window, 50_000).unwrap();
        assert!((f.rho - rho).abs() < 1e-12, "ρ for {name}: {}", f.rho);
        c.check(
            &format!("Hölder exponent of the harmonic extension [{name}]"),
            f.fit.exponent >= rho - 0.1,
            format!("exponent {:.4} ≥ ρ − 0.1 = {:.4} (R² {:.4})", f.fit.exponent, rho - 0.1, f.fit.r_squared),
        );
        c.finish();
    }
}
