//! Increments, paths and first exits of the stable process.
//!
//! Atomic models are sampled exactly: the process is a sum of independent
//! one-dimensional symmetric stable motions along the atom directions.
//! Any model can be sampled by jump splitting, which keeps the compound
//! Poisson part of ν restricted to `|y| ≥ ε` and drops the small jumps; the
//! dropped second moment is reported against a bias budget.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{nu_tail, ModelParams, SpectralMeasure};
use crate::rng::{chunks, replica_rng, SimRng};
use crate::stats::{estimate_of, McEstimate};
use crate::vecops::{dist, norm};

/// Abort a single path after this many steps or jumps.
pub const MAX_STEPS: u64 = 10_000_000;
pub const DEFAULT_EPS: f64 = 1e-3;
pub const DEFAULT_DT_CAL: f64 = 0.1;
pub const DEFAULT_BIAS_BUDGET: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    AtomicExact,
    JumpSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScheme {
    pub mode: SimMode,
    /// Small-jump threshold (jump-split only).
    pub eps: f64,
    pub dt_max: f64,
    /// Step calibration: `dt = min(dt_max, (dist/4)^α · dt_cal)` near the boundary.
    pub dt_cal: f64,
    pub seed: u64,
    /// Largest admissible dropped second moment `t ∫_{|y|<ε} |y|² ν(dy)`.
    pub bias_budget: f64,
    /// Use `dt = dt_max` regardless of position (atomic-exact only); paths from
    /// different starts then share their noise exactly.
    pub fixed_steps: bool,
}

impl SimScheme {
    pub fn atomic_exact(seed: u64) -> Self {
        SimScheme {
            mode: SimMode::AtomicExact,
            eps: DEFAULT_EPS,
            dt_max: 1.0,
            dt_cal: DEFAULT_DT_CAL,
            seed,
            bias_budget: DEFAULT_BIAS_BUDGET,
            fixed_steps: false,
        }
    }

    pub fn jump_split(eps: f64, seed: u64) -> Self {
        SimScheme { mode: SimMode::JumpSplit, eps, ..Self::atomic_exact(seed) }
    }

    /// Exact sampling for atomic μ, jump splitting at the default ε otherwise.
    pub fn for_model(m: &ModelParams, seed: u64) -> Self {
        if m.mu().is_atomic() {
            Self::atomic_exact(seed)
        } else {
            Self::jump_split(DEFAULT_EPS, seed)
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimScheme { seed, ..self.clone() }
    }

    pub fn with_fixed_steps(&self, dt: f64) -> Self {
        SimScheme { dt_max: dt, fixed_steps: true, ..self.clone() }
    }

    /// A scheme under which exits from different starts use identical noise.
    pub fn for_common_noise(&self) -> Self {
        match self.mode {
            SimMode::AtomicExact if !self.fixed_steps => self.with_fixed_steps(self.dt_max.min(1e-3)),
            _ => self.clone(),
        }
    }

    pub fn validate(&self, m: &ModelParams) -> Result<()> {
        if !(self.dt_max > 0.0) || !(self.dt_cal > 0.0) {
            return Err(Error::InvalidParameter("dt_max and dt_cal must be positive".into()));
        }
        match self.mode {
            SimMode::AtomicExact if !m.mu().is_atomic() => {
                Err(Error::Unsupported("exact sampling requires an atomic spectral measure".into()))
            }
            SimMode::JumpSplit if !(self.eps > 0.0) => Err(Error::InvalidParameter("eps must be positive".into())),
            _ => Ok(()),
        }
    }

    /// Second moment of the dropped small jumps over time `t` (0 for exact sampling).
    pub fn small_jump_moment(&self, m: &ModelParams, t: f64) -> f64 {
        match self.mode {
            SimMode::AtomicExact => 0.0,
            SimMode::JumpSplit => {
                let a = m.alpha();
                t * m.mu().total_mass() * self.eps.powf(2.0 - a) / (2.0 - a)
            }
        }
    }
}

/// Balls and origin-centred annuli; both open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl Domain {
    pub fn unit_ball(d: usize) -> Self {
        Domain::Ball { center: vec![0.0; d], radius: 1.0 }
    }

    pub fn ball(center: &[f64], radius: f64) -> Self {
        Domain::Ball { center: center.to_vec(), radius }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Domain::Ball { center, radius } => {
                if center.len() != d || !(*radius > 0.0) {
                    return Err(Error::InvalidParameter("ball needs a d-dimensional centre and positive radius".into()));
                }
            }
            Domain::Annulus { inner, outer } => {
                if !(*inner > 0.0 && outer > inner) {
                    return Err(Error::InvalidParameter("annulus needs 0 < inner < outer".into()));
                }
            }
        }
        Ok(())
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Ball { center, radius } => radius - dist(x, center),
            Domain::Annulus { inner, outer } => {
                let r = norm(x);
                (r - inner).min(outer - r)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) > 0.0
    }

    /// Distance from a point outside the domain to its closure.
    pub fn overshoot(&self, x: &[f64]) -> f64 {
        (-self.signed_distance(x)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitSample {
    pub tau: f64,
    pub x_exit: Vec<f64>,
    pub n_steps: u64,
    pub overshoot: f64,
    pub truncation_bias_flag: bool,
}

/// Direction sampler for μ/|μ|.
#[derive(Debug)]
pub struct JumpSampler {
    kind: Directions,
}

#[derive(Debug)]
enum Directions {
    Atoms { dirs: Vec<Vec<f64>>, cum: Vec<f64> },
    Cells { cum: Vec<f64>, width: f64 },
}

fn cumulative(w: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cum: Vec<f64> = w
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    for c in &mut cum {
        *c /= acc;
    }
    cum
}

impl JumpSampler {
    fn new(mu: &SpectralMeasure) -> Self {
        let kind = match mu {
            SpectralMeasure::Atomic { atoms } => Directions::Atoms {
                dirs: atoms.iter().map(|a| a.dir.clone()).collect(),
                cum: cumulative(atoms.iter().map(|a| a.weight)),
            },
            SpectralMeasure::AngularDensity { density } => Directions::Cells {
                cum: cumulative(density.values().iter().copied()),
                width: density.cell_width(),
            },
        };
        JumpSampler { kind }
    }

    /// Adds `r · θ` to `x`, with θ drawn from μ/|μ|.
    #[inline]
    fn add_jump(&self, rng: &mut SimRng, r: f64, x: &mut [f64]) {
        let u: f64 = rng.random();
        match &self.kind {
            Directions::Atoms { dirs, cum } => {
                let i = cum.partition_point(|c| *c <= u).min(dirs.len() - 1);
                for (xi, di) in x.iter_mut().zip(&dirs[i]) {
                    *xi += r * di;
                }
            }
            Directions::Cells { cum, width } => {
                let i = cum.partition_point(|c| *c <= u).min(cum.len() - 1);
                let v: f64 = rng.random();
                let th = (i as f64 + v - 0.5) * width;
                let (s, c) = th.sin_cos();
                x[0] += r * c;
                x[1] += r * s;
            }
        }
    }
}

fn jump_sampler(m: &ModelParams) -> &JumpSampler {
    m.cache.jumps.get_or_init(|| JumpSampler::new(m.mu()))
}

/// One draw with characteristic function `exp(−scale^α |v|^α)` (Chambers–Mallows–Stuck).
pub fn sample_stable_1d<R: Rng + ?Sized>(alpha: f64, scale: f64, rng: &mut R) -> f64 {
    loop {
        let v = PI * (rng.random::<f64>() - 0.5);
        let cv = v.cos();
        if cv <= 0.0 {
            continue;
        }
        if alpha == 1.0 {
            return scale * v.tan();
        }
        let w: f64 = Exp1.sample(rng);
        if w <= 0.0 {
            continue;
        }
        let y = (alpha * v).sin() / cv.powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
        return scale * y;
    }
}

/// Per-model sampling state shared by all paths of one run.
struct Engine<'a> {
    alpha: f64,
    d: usize,
    scheme: &'a SimScheme,
    /// `(ξ_j, (C_α 2 w_j)^{1/α})` per symmetric pair.
    pairs: Vec<(&'a [f64], f64)>,
    jumps: &'a JumpSampler,
    rate: f64,
    moment_rate: f64,
}

impl<'a> Engine<'a> {
    fn new(m: &'a ModelParams, s: &'a SimScheme) -> Result<Self> {
        s.validate(m)?;
        let alpha = m.alpha();
        let pairs = m.scaled_pairs().iter().map(|p| (p.dir.as_slice(), p.weight.powf(1.0 / alpha))).collect();
        let rate = match s.mode {
            SimMode::JumpSplit => nu_tail(m, s.eps),
            SimMode::AtomicExact => 0.0,
        };
        Ok(Engine {
            alpha,
            d: m.d(),
            scheme: s,
            pairs,
            jumps: jump_sampler(m),
            rate,
            moment_rate: s.small_jump_moment(m, 1.0),
        })
    }

    #[inline]
    fn exact_increment(&self, dt: f64, rng: &mut SimRng, x: &mut [f64]) {
        let tf = dt.powf(1.0 / self.alpha);
        for (dir, sc) in &self.pairs {
            let y = sample_stable_1d(self.alpha, tf * sc, rng);
            for (xi, di) in x.iter_mut().zip(dir.iter()) {
                *xi += y * di;
            }
        }
    }

    #[inline]
    fn big_jump(&self, rng: &mut SimRng, x: &mut [f64]) {
        let u: f64 = 1.0 - rng.random::<f64>();
        let r = self.scheme.eps * u.powf(-1.0 / self.alpha);
        self.jumps.add_jump(rng, r, x);
    }

    #[inline]
    fn waiting_time(&self, rng: &mut SimRng) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / self.rate
    }

    fn increment(&self, t: f64, rng: &mut SimRng, x: &mut [f64]) -> Result<usize> {
        match self.scheme.mode {
            SimMode::AtomicExact => {
                self.exact_increment(t, rng, x);
                Ok(0)
            }
            SimMode::JumpSplit => {
                let moment = self.moment_rate * t;
                if moment > self.scheme.bias_budget {
                    return Err(Error::BiasBudgetExceeded { moment, budget: self.scheme.bias_budget });
                }
                let lam = self.rate * t;
                let count = if lam > 0.0 {
                    Poisson::new(lam).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng) as usize
                } else {
                    0
                };
                for _ in 0..count {
                    self.big_jump(rng, x);
                }
                Ok(count)
            }
        }
    }

    fn finish(&self, domain: &Domain, tau: f64, x: Vec<f64>, steps: u64) -> ExitSample {
        ExitSample {
            tau,
            overshoot: domain.overshoot(&x),
            x_exit: x,
            n_steps: steps,
            truncation_bias_flag: self.moment_rate * tau > self.scheme.bias_budget,
        }
    }

    /// First exit from `domain`; a start outside the domain exits at time 0.
    fn exit(&self, domain: &Domain, x0: &[f64], rng: &mut SimRng) -> Result<ExitSample> {
        let mut x = x0.to_vec();
        let mut t = 0.0;
        let mut steps = 0u64;
        if !domain.contains(&x) {
            return Ok(self.finish(domain, 0.0, x, 0));
        }
        loop {
            match self.scheme.mode {
                SimMode::AtomicExact => {
                    let dt = if self.scheme.fixed_steps {
                        self.scheme.dt_max
                    } else {
                        let gap = domain.signed_distance(&x);
                        self.scheme.dt_max.min((gap / 4.0).powf(self.alpha) * self.scheme.dt_cal)
                    };
                    self.exact_increment(dt, rng, &mut x);
                    t += dt;
                }
                SimMode::JumpSplit => {
                    t += self.waiting_time(rng);
                    self.big_jump(rng, &mut x);
                }
            }
            steps += 1;
            if !domain.contains(&x) {
                return Ok(self.finish(domain, t, x, steps));
            }
            if steps >= MAX_STEPS {
                return Err(Error::StepLimitExceeded { steps });
            }
        }
    }

    /// Exits of `x_k + L_t` for a single noise path `L`, one per start.
    fn exits_shared(&self, domain: &Domain, starts: &[Vec<f64>], rng: &mut SimRng) -> Result<Vec<ExitSample>> {
        if self.scheme.mode == SimMode::AtomicExact && !self.scheme.fixed_steps {
            return Err(Error::InvalidParameter("shared-noise exits need fixed steps in exact mode".into()));
        }
        let mut out: Vec<Option<ExitSample>> = starts
            .iter()
            .map(|x| (!domain.contains(x)).then(|| self.finish(domain, 0.0, x.clone(), 0)))
            .collect();
        let mut active = out.iter().filter(|o| o.is_none()).count();
        let mut noise = vec![0.0; self.d];
        let mut pos = vec![0.0; self.d];
        let mut t = 0.0;
        let mut steps = 0u64;
        while active > 0 {
            match self.scheme.mode {
                SimMode::AtomicExact => {
                    self.exact_increment(self.scheme.dt_max, rng, &mut noise);
                    t += self.scheme.dt_max;
                }
                SimMode::JumpSplit => {
                    t += self.waiting_time(rng);
                    self.big_jump(rng, &mut noise);
                }
            }
            steps += 1;
            for (k, slot) in out.iter_mut().enumerate() {
                if slot.is_some() {
                    continue;
                }
                for ((p, s), n) in pos.iter_mut().zip(&starts[k]).zip(&noise) {
                    *p = s + n;
                }
                if !domain.contains(&pos) {
                    *slot = Some(self.finish(domain, t, pos.clone(), steps));
                    active -= 1;
                }
            }
            if steps >= MAX_STEPS {
                return Err(Error::StepLimitExceeded { steps });
            }
        }
        Ok(out.into_iter().map(|o| o.expect("every start exits")).collect())
    }
}

/// Displacement `X_t` from the origin.
pub fn sample_increment(m: &ModelParams, s: &SimScheme, t: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    sample_increment_counted(m, s, t, rng).map(|(x, _)| x)
}

/// Displacement together with the number of big jumps (0 in exact mode).
pub fn sample_increment_counted(m: &ModelParams, s: &SimScheme, t: f64, rng: &mut SimRng) -> Result<(Vec<f64>, usize)> {
    if !(t > 0.0 && t <= s.dt_max) {
        return Err(Error::InvalidParameter(format!("time step {t} must lie in (0, dt_max = {}]", s.dt_max)));
    }
    let e = Engine::new(m, s)?;
    let mut x = vec![0.0; m.d()];
    let n = e.increment(t, rng, &mut x)?;
    Ok((x, n))
}

/// Positions at `t_end · k / steps`, `k = 0..=steps`, starting from `x0`.
pub fn sample_path(m: &ModelParams, s: &SimScheme, x0: &[f64], t_end: f64, steps: usize, rng: &mut SimRng) -> Result<Vec<Vec<f64>>> {
    if steps == 0 || !(t_end > 0.0) {
        return Err(Error::InvalidParameter("path needs t_end > 0 and at least one step".into()));
    }
    let dt = t_end / steps as f64;
    if dt > s.dt_max {
        return Err(Error::InvalidParameter(format!("path step {dt} exceeds dt_max = {}", s.dt_max)));
    }
    let e = Engine::new(m, s)?;
    let mut x = x0.to_vec();
    let mut path = vec![x.clone()];
    for _ in 0..steps {
        e.increment(dt, rng, &mut x)?;
        path.push(x.clone());
    }
    Ok(path)
}

fn check_start(m: &ModelParams, domain: &Domain, x0: &[f64]) -> Result<()> {
    domain.validate(m.d())?;
    if x0.len() != m.d() {
        return Err(Error::InvalidParameter("start point dimension mismatch".into()));
    }
    if !domain.contains(x0) {
        return Err(Error::DomainError("start point must lie inside the domain".into()));
    }
    Ok(())
}

/// One first exit from `domain` started at `x0`.
pub fn sample_exit(m: &ModelParams, s: &SimScheme, domain: &Domain, x0: &[f64], rng: &mut SimRng) -> Result<ExitSample> {
    check_start(m, domain, x0)?;
    Engine::new(m, s)?.exit(domain, x0, rng)
}

/// Runs `f(engine, rng, global index)` for `n` items over replica streams of `seed`.
fn par_paths<T, F>(m: &ModelParams, s: &SimScheme, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Engine, &mut SimRng, usize) -> Result<T> + Sync,
{
    let engine = Engine::new(m, s)?;
    let parts: Vec<Result<Vec<T>>> = chunks(n)
        .into_par_iter()
        .map(|(replica, start, len)| {
            let mut rng = replica_rng(s.seed, replica);
            (start..start + len).map(|i| f(&engine, &mut rng, i)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// `n` independent exits; sample `i` always comes from the same stream position.
pub fn simulate_exits(m: &ModelParams, s: &SimScheme, domain: &Domain, x0: &[f64], n: usize) -> Result<Vec<ExitSample>> {
    check_start(m, domain, x0)?;
    par_paths(m, s, n, |e, rng, _| e.exit(domain, x0, rng))
}

/// Exits from each start point in `starts`, started afresh per start (`out[i][k]`
/// is the `i`-th path from `starts[k]`). Starts outside the domain exit at time 0.
pub fn simulate_exits_from(
    m: &ModelParams,
    s: &SimScheme,
    domain: &Domain,
    starts: &[Vec<f64>],
) -> Result<Vec<ExitSample>> {
    domain.validate(m.d())?;
    par_paths(m, s, starts.len(), |e, rng, i| e.exit(domain, &starts[i], rng))
}

/// `n` noise paths, each shared by every start (common random numbers).
/// Returns `out[i][k]` for path `i` and start `k`.
pub fn simulate_exits_shared(
    m: &ModelParams,
    s: &SimScheme,
    domain: &Domain,
    starts: &[Vec<f64>],
    n: usize,
) -> Result<Vec<Vec<ExitSample>>> {
    domain.validate(m.d())?;
    if starts.iter().any(|x| x.len() != m.d()) {
        return Err(Error::InvalidParameter("start point dimension mismatch".into()));
    }
    par_paths(m, s, n, |e, rng, _| e.exits_shared(domain, starts, rng))
}

/// Monte Carlo `E^{x0} τ` over `n ≥ 1000` exits.
pub fn expected_exit_time(m: &ModelParams, s: &SimScheme, domain: &Domain, x0: &[f64], n: usize) -> Result<McEstimate> {
    if n < 1000 {
        return Err(Error::InvalidParameter(format!("expected_exit_time needs n ≥ 1000, got {n}")));
    }
    let ex = simulate_exits(m, s, domain, x0, n)?;
    let taus: Vec<f64> = ex.iter().map(|e| e.tau).collect();
    Ok(estimate_of(&taus))
}

/// Classical isotropic expected exit time of the unit ball,
/// `Γ(d/2)(1−|x|²)^{α/2} / (2^α Γ(1+α/2) Γ((d+α)/2))`, for the model with Φ(u) = |u|^α.
pub fn isotropic_exit_time(d: usize, alpha: f64, x: &[f64]) -> f64 {
    use statrs::function::gamma::gamma;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        return 0.0;
    }
    let df = d as f64;
    gamma(df / 2.0) * (1.0 - r2).powf(alpha / 2.0)
        / (2f64.powf(alpha) * gamma(1.0 + alpha / 2.0) * gamma((df + alpha) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::rng::replica_rng;
    use crate::stats::{ks_two_sample, median, Moments};

    #[test]
    fn stable_1d_characteristic_function() {
        let mut rng = replica_rng(11, 0);
        for (alpha, scale, u) in [(1.0, 1.0, 1.0), (1.5, 0.7, 1.3), (0.6, 1.0, 0.8)] {
            let n = 200_000;
            let mut acc = Moments::default();
            for _ in 0..n {
                acc.push((u * sample_stable_1d(alpha, scale, &mut rng)).cos());
            }
            let e = acc.estimate();
            let target = (-(scale * u as f64).powf(alpha)).exp();
            assert!(e.z_score(target).abs() < 4.0, "alpha {alpha}: {e:?} vs {target}");
        }
    }

    #[test]
    fn stable_1d_symmetry_and_scaling() {
        let mut rng = replica_rng(12, 0);
        let a: Vec<f64> = (0..20_000).map(|_| sample_stable_1d(1.3, 1.0, &mut rng)).collect();
        assert!(median(&a).abs() < 0.05);
        let scaled: Vec<f64> = a.iter().map(|x| 2.5 * x).collect();
        let b: Vec<f64> = (0..20_000).map(|_| sample_stable_1d(1.3, 2.5, &mut rng)).collect();
        assert!(ks_two_sample(&scaled, &b).p_value > 1e-3);
    }

    #[test]
    fn product_increment_marginal_is_cauchy() {
        let m = presets::product_cauchy(2).unwrap();
        let s = SimScheme::atomic_exact(3);
        let mut rng = replica_rng(3, 0);
        let n = 20_000;
        let mut cos = Moments::default();
        let mut xs = Vec::with_capacity(n);
        let mut inv = Vec::with_capacity(n);
        for _ in 0..n {
            let x = sample_increment(&m, &s, 1.0, &mut rng).unwrap();
            cos.push((x[0] + x[1]).cos());
            xs.push(x[0]);
            inv.push((PI * (rng.random::<f64>() - 0.5)).tan());
        }
        assert!(cos.estimate().z_score((-2f64).exp()).abs() < 4.0);
        assert!(ks_two_sample(&xs, &inv).p_value > 1e-3);
    }

    #[test]
    fn big_jump_count_is_poisson() {
        let m = presets::isotropic_cauchy().unwrap();
        let s = SimScheme { bias_budget: 1.0, ..SimScheme::jump_split(0.1, 5) };
        let mut rng = replica_rng(5, 0);
        let n = 4000;
        let mut c = Moments::default();
        for _ in 0..n {
            c.push(sample_increment_counted(&m, &s, 1.0, &mut rng).unwrap().1 as f64);
        }
        assert!((c.mean() - 10.0).abs() < 3.0 * (10.0 / n as f64).sqrt());
        assert!((c.variance() - 10.0).abs() < 1.0);
    }

    #[test]
    fn bias_budget_and_arguments() {
        let m = presets::isotropic_cauchy().unwrap();
        let mut rng = replica_rng(1, 0);
        let s = SimScheme::jump_split(0.5, 1);
        assert!(matches!(sample_increment(&m, &s, 1.0, &mut rng), Err(Error::BiasBudgetExceeded { .. })));
        assert!(matches!(sample_increment(&m, &s, 2.0, &mut rng), Err(Error::InvalidParameter(_))));
        let exact = SimScheme::atomic_exact(1);
        assert!(matches!(sample_increment(&m, &exact, 0.5, &mut rng), Err(Error::Unsupported(_))));
        let dom = Domain::unit_ball(2);
        assert!(matches!(sample_exit(&m, &s, &dom, &[2.0, 0.0], &mut rng), Err(Error::DomainError(_))));
    }

    #[test]
    fn exits_are_outside_and_reproducible() {
        let m = presets::product_cauchy(2).unwrap();
        let dom = Domain::unit_ball(2);
        for s in [SimScheme::atomic_exact(9), SimScheme::jump_split(1e-2, 9)] {
            let a = simulate_exits(&m, &s, &dom, &[0.0, 0.0], 600).unwrap();
            let b = simulate_exits(&m, &s, &dom, &[0.0, 0.0], 600).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|e| !dom.contains(&e.x_exit) && e.tau > 0.0 && e.overshoot >= 0.0));
        }
    }

    #[test]
    fn isotropic_exit_time_oracle() {
        assert!((isotropic_exit_time(2, 1.0, &[0.0, 0.0]) - 2.0 / PI).abs() < 1e-14);
        let m = presets::isotropic_cauchy().unwrap();
        let s = SimScheme::jump_split(1e-3, 21);
        let e = expected_exit_time(&m, &s, &Domain::unit_ball(2), &[0.0, 0.0], 20_000).unwrap();
        assert!(e.z_score(2.0 / PI).abs() < 3.5, "{e:?}");
    }

    #[test]
    fn exit_time_scaling_and_monotonicity() {
        let m = presets::product_cauchy(2).unwrap();
        let s = SimScheme::atomic_exact(4);
        let one = expected_exit_time(&m, &s, &Domain::unit_ball(2), &[0.0, 0.0], 8000).unwrap();
        let two = expected_exit_time(&m, &s, &Domain::ball(&[0.0, 0.0], 2.0), &[0.0, 0.0], 8000).unwrap();
        let comb = (two.stderr.powi(2) + 4.0 * one.stderr.powi(2)).sqrt();
        assert!((two.estimate - 2.0 * one.estimate).abs() < 3.5 * comb);
        let edge = expected_exit_time(&m, &s, &Domain::unit_ball(2), &[0.9, 0.0], 8000).unwrap();
        assert!(edge.estimate + 3.0 * edge.stderr < one.estimate);
    }

    #[test]
    fn shared_noise_translates_paths() {
        let m = presets::isotropic_cauchy().unwrap();
        let s = SimScheme::jump_split(1e-2, 2);
        let dom = Domain::unit_ball(2);
        let starts = vec![vec![0.0, 0.0], vec![0.01, 0.0], vec![3.0, 0.0]];
        let out = simulate_exits_shared(&m, &s, &dom, &starts, 300).unwrap();
        for row in &out {
            assert_eq!(row[2].tau, 0.0);
            assert!(row.iter().all(|e| !dom.contains(&e.x_exit)));
        }
        let same = out.iter().filter(|r| r[0].n_steps == r[1].n_steps).count();
        assert!(same > 250);
        let exact = SimScheme::atomic_exact(2);
        let p = presets::product_cauchy(2).unwrap();
        assert!(simulate_exits_shared(&p, &exact, &dom, &starts, 4).is_err());
        assert!(simulate_exits_shared(&p, &exact.for_common_noise(), &dom, &starts, 4).is_ok());
    }

    #[test]
    fn jump_split_agrees_with_exact_on_atomic_model() {
        let m = presets::product_cauchy(2).unwrap();
        let dom = Domain::unit_ball(2);
        let f = |ex: &[ExitSample]| {
            let v: Vec<f64> = ex.iter().map(|e| (e.x_exit[0] * e.x_exit[0]).min(4.0)).collect();
            estimate_of(&v)
        };
        let a = f(&simulate_exits(&m, &SimScheme::atomic_exact(8), &dom, &[0.3, 0.1], 20_000).unwrap());
        let b = f(&simulate_exits(&m, &SimScheme::jump_split(1e-3, 8), &dom, &[0.3, 0.1], 20_000).unwrap());
        let comb = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() < 3.5 * comb, "{a:?} {b:?}");
    }

    #[test]
    fn annulus_domain() {
        let dom = Domain::Annulus { inner: 0.5, outer: 1.0 };
        assert!(dom.contains(&[0.7, 0.0]) && !dom.contains(&[0.2, 0.0]));
        assert!((dom.overshoot(&[0.2, 0.0]) - 0.3).abs() < 1e-15);
        let m = presets::isotropic_cauchy().unwrap();
        let s = SimScheme::jump_split(1e-2, 6);
        let ex = simulate_exits(&m, &s, &dom, &[0.75, 0.0], 500).unwrap();
        assert!(ex.iter().all(|e| !dom.contains(&e.x_exit)));
    }
}
