//! Potential kernel V(x) = ∫_0^∞ p_t(x) dt, its derivatives, potentials of
//! finite measures, and Hölder-exponent fits.
//!
//! With s = t^{−1/α}, `D^β V(θ) = α ∫_0^∞ s^{d+|β|−α−1} D^β p₁(sθ) ds` on the
//! unit sphere and `D^β V(x) = |x|^{α−d−|β|} D^β V(x/|x|)`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::Serialize;

use crate::density::p1_derivative;
use crate::error::{Error, Result};
use crate::measure::{ModelParams, SpectralMeasure};
use crate::quadrature::GaussLegendre;
use crate::stats::linear_fit;
use crate::vecops::{angle, dist, norm};

const NEAR_PANELS: i32 = 12;
const TAIL_REL: f64 = 1e-12;
const DIVERGENCE_FACTOR: f64 = 1e6;
const V_MAX: f64 = 100.0;
const RELIABLE_REL: f64 = 1e-12;

/// Outcome of the radial integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Radial {
    Finite(f64),
    Infinite,
}

fn radial_integral(m: &ModelParams, theta: &[f64], beta: &[usize]) -> Result<Radial> {
    let d = m.d();
    let alpha = m.alpha();
    let order: usize = beta.iter().sum();
    let p = (d + order) as f64 - alpha;
    let f = |s: f64| -> Result<(f64, f64)> {
        let x: Vec<f64> = theta.iter().map(|c| c * s).collect();
        let v = p1_derivative(m, &x, beta)?;
        Ok((v.value, v.error))
    };
    let gl8 = GaussLegendre::cached(8);
    let gl10 = GaussLegendre::cached(10);

    // near part on geometric panels, innermost by s = w^{1/p}
    let mut near = 0.0;
    let mut hi = 1.0;
    for _ in 0..NEAR_PANELS {
        let lo = 0.5 * hi;
        for (s, w) in gl8.mapped(lo, hi) {
            near += w * s.powf(p - 1.0) * f(s)?.0;
        }
        hi = lo;
    }
    let wmax = hi.powf(p);
    for (w, wt) in gl8.mapped(0.0, wmax) {
        near += wt / p * f(w.powf(1.0 / p))?.0;
    }

    // Below this level p₁ is dominated by the rounding floor of the angular
    // quadrature; the tail is extrapolated from the observed decay instead.
    let origin = vec![0.0; d];
    let floor = RELIABLE_REL * p1_derivative(m, &origin, &vec![0; d])?.value.abs();
    let kappa = m.indices().kappa0 - order as f64;
    let rate_of = |ends: &[(f64, f64)]| -> f64 {
        let n = ends.len();
        let obs = if n >= 2 {
            let (v1, e1) = ends[n - 2];
            let (v2, e2) = ends[n - 1];
            if e1 > 0.0 && e2 > 0.0 {
                (e1 / e2).ln() / (v2 - v1)
            } else {
                0.0
            }
        } else {
            0.0
        };
        if kappa > 0.0 {
            kappa.max(obs)
        } else {
            obs
        }
    };
    let diverged = || {
        if order == 0 {
            Ok(Radial::Infinite)
        } else {
            Err(Error::DomainError("derivative integral does not converge along this direction".into()))
        }
    };
    let mut far = 0.0;
    let mut far_abs = 0.0;
    let mut v: f64 = 0.0;
    let mut ends: Vec<(f64, f64)> = Vec::new();
    let mut last_sign = 1.0;
    loop {
        let width = if v < 4.0 {
            0.5
        } else if v < 10.0 {
            1.0
        } else {
            2.0
        };
        let (a, b) = (v, v + width);
        let (fe, ee) = f(b.exp())?;
        let reliable = fe.abs() > floor && ee <= 1e-3 * fe.abs();
        if !reliable && !ends.is_empty() {
            let rate = rate_of(&ends);
            if rate <= 1e-3 {
                return diverged();
            }
            far += last_sign * ends[ends.len() - 1].1 / rate;
            break;
        }
        for (u, w) in gl10.mapped(a, b) {
            let g = (p * u).exp() * f(u.exp())?.0;
            far += w * g;
            far_abs += w * g.abs();
        }
        v = b;
        let env = (p * v).exp() * fe.abs();
        last_sign = fe.signum();
        ends.push((v, env));
        let rate = rate_of(&ends);
        if order == 0 && far.abs() > DIVERGENCE_FACTOR * near.abs().max(1e-300) {
            return Ok(Radial::Infinite);
        }
        if rate > 1e-3 && env / rate <= TAIL_REL * (near.abs() + far_abs) {
            far += last_sign * env / rate;
            break;
        }
        if env == 0.0 {
            break;
        }
        if v >= V_MAX {
            return diverged();
        }
    }
    Ok(Radial::Finite(alpha * (near + far)))
}

/// V(θ) on the unit sphere; `f64::INFINITY` when the radial integral diverges.
pub fn potential_direction(m: &ModelParams, theta: &[f64]) -> f64 {
    let n = norm(theta);
    let th: Vec<f64> = theta.iter().map(|c| c / n).collect();
    match radial_integral(m, &th, &vec![0; m.d()]) {
        Ok(Radial::Finite(v)) => v,
        Ok(Radial::Infinite) => f64::INFINITY,
        Err(_) => f64::NAN,
    }
}

/// V(x) = |x|^{α−d} V(x/|x|).
pub fn potential(m: &ModelParams, x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::OriginSingularity);
    }
    let th: Vec<f64> = x.iter().map(|c| c / r).collect();
    Ok(r.powf(m.alpha() - m.d() as f64) * potential_direction(m, &th))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeValue {
    pub value: f64,
    /// Set when |β| ≥ κ₀, where no regularity is guaranteed.
    pub out_of_theorem: bool,
}

/// D^β V(x).
pub fn potential_derivative(m: &ModelParams, x: &[f64], beta: &[usize]) -> Result<DerivativeValue> {
    if beta.len() != m.d() {
        return Err(Error::InvalidParameter("multiindex dimension mismatch".into()));
    }
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::OriginSingularity);
    }
    let order: usize = beta.iter().sum();
    let th: Vec<f64> = x.iter().map(|c| c / r).collect();
    let value = match radial_integral(m, &th, beta)? {
        Radial::Finite(v) => v,
        Radial::Infinite => f64::INFINITY,
    };
    let scale = r.powf(m.alpha() - (m.d() + order) as f64);
    Ok(DerivativeValue { value: scale * value, out_of_theorem: order as f64 >= m.indices().kappa0 })
}

/// Direction table of V(θ) for d = 2: Chebyshev interpolation on the arcs
/// between consecutive atom directions (V is even, so θ ∈ [0, π)).
#[derive(Debug, Clone)]
pub struct PotentialTable {
    cuts: Vec<f64>,
    nodes: Vec<f64>,
    values: Vec<Vec<f64>>,
    /// Uniform resampling of each arc for fast 4-point Lagrange lookups.
    dense: Vec<Vec<f64>>,
}

const CHEB_NODES: usize = 41;
const DENSE_CELLS: usize = 512;

impl PotentialTable {
    pub fn build(m: &ModelParams) -> Result<Self> {
        if m.d() != 2 {
            return Err(Error::Unsupported("potential direction tables are implemented for d = 2".into()));
        }
        let mut cuts: Vec<f64> = match m.mu() {
            SpectralMeasure::Atomic { .. } => m.scaled_pairs().iter().map(|p| angle(&p.dir).rem_euclid(PI)).collect(),
            SpectralMeasure::AngularDensity { .. } => Vec::new(),
        };
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        if cuts.is_empty() {
            cuts.push(0.0);
        }
        let first = cuts[0];
        cuts.push(first + PI);
        let k = CHEB_NODES - 1;
        let nodes: Vec<f64> = (0..=k).map(|j| -(PI * j as f64 / k as f64).cos()).collect();
        let mut values = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut seg = Vec::with_capacity(CHEB_NODES);
            for x in &nodes {
                let th = 0.5 * (a + b) + 0.5 * (b - a) * x;
                let v = potential_direction(m, &[th.cos(), th.sin()]);
                if !v.is_finite() {
                    return Err(Error::HypothesisViolated(format!("V is infinite in direction θ = {th:.4}")));
                }
                seg.push(v);
            }
            values.push(seg);
        }
        let mut t = PotentialTable { cuts, nodes, values, dense: Vec::new() };
        t.dense = (0..t.values.len())
            .map(|i| (0..=DENSE_CELLS).map(|j| t.arc_value(i, -1.0 + 2.0 * j as f64 / DENSE_CELLS as f64)).collect())
            .collect();
        Ok(t)
    }

    fn arc_of(&self, theta: f64) -> (usize, f64) {
        let first = self.cuts[0];
        let th = first + (theta - first).rem_euclid(PI);
        let i = match self.cuts.binary_search_by(|c| c.total_cmp(&th)) {
            Ok(i) => i.min(self.values.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.values.len() - 1),
        };
        let (a, b) = (self.cuts[i], self.cuts[i + 1]);
        (i, ((2.0 * th - a - b) / (b - a)).clamp(-1.0, 1.0))
    }

    fn arc_value(&self, i: usize, x: f64) -> f64 {
        let vals = &self.values[i];
        let k = self.nodes.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (xn, v)) in self.nodes.iter().zip(vals).enumerate() {
            let diff = x - xn;
            if diff == 0.0 {
                return *v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == k {
                w *= 0.5;
            }
            let t = w / diff;
            num += t * v;
            den += t;
        }
        num / den
    }

    /// V(θ) at angle θ (barycentric Chebyshev evaluation).
    pub fn eval_angle(&self, theta: f64) -> f64 {
        let (i, x) = self.arc_of(theta);
        self.arc_value(i, x)
    }

    /// V(θ) from the uniform resampling; agrees with [`Self::eval_angle`] to ~1e-10.
    pub fn eval_angle_fast(&self, theta: f64) -> f64 {
        let (i, x) = self.arc_of(theta);
        let d = &self.dense[i];
        let u = (x + 1.0) * 0.5 * DENSE_CELLS as f64;
        let j = (u.floor() as usize).clamp(1, DENSE_CELLS - 2);
        let f = u - j as f64;
        let (a, b, c, e) = (d[j - 1], d[j], d[j + 1], d[j + 2]);
        let (fm, f1, f2) = (f + 1.0, f - 1.0, f - 2.0);
        -a * f * f1 * f2 / 6.0 + b * fm * f1 * f2 / 2.0 - c * fm * f * f2 / 2.0 + e * fm * f * f1 / 6.0
    }

    /// V(x) for planar x ≠ 0.
    pub fn eval(&self, alpha: f64, x: &[f64]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        r.powf(alpha - 2.0) * self.eval_angle_fast(x[1].atan2(x[0]))
    }
}

/// Shared direction table (built once per model).
pub fn potential_table(m: &ModelParams) -> Result<Arc<PotentialTable>> {
    m.cache.potential_table.get_or_init(|| PotentialTable::build(m).map(Arc::new)).clone()
}

/// V(x) through the direction table in d = 2, directly otherwise.
pub fn potential_fast(m: &ModelParams, x: &[f64]) -> Result<f64> {
    if norm(x) == 0.0 {
        return Err(Error::OriginSingularity);
    }
    if m.d() == 2 {
        Ok(potential_table(m)?.eval(m.alpha(), x))
    } else {
        potential(m, x)
    }
}

/// Σ w_i V(x − z_i).
pub fn potential_of_measure(m: &ModelParams, weights: &[(Vec<f64>, f64)], x: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (z, w) in weights {
        let dz = dist(x, z);
        if dz < 1e-9 {
            return Err(Error::SupportHit { distance: dz });
        }
        let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a - b).collect();
        s += w * potential_fast(m, &y)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    Power,
    PowerLog,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    /// Slope of the pure power fit.
    pub exponent: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub modulus_model: FitModel,
    /// Slope after dividing the increments by log(2 + 1/h).
    pub log_exponent: f64,
    pub log_r_squared: f64,
    /// Exponent at or above 0.98: the increments are no rougher than Lipschitz.
    pub saturated: bool,
    pub increments: Vec<(f64, f64)>,
}

/// Fit h ↦ |Δ(h)| in log-log; `predicted_integer` enables power-log model selection.
pub fn fit_increments(increments: &[(f64, f64)], predicted_integer: bool) -> Result<HolderFit> {
    if increments.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 increments".into()));
    }
    if increments.iter().any(|(h, v)| !(*h > 0.0) || !(v.abs() > 0.0) || !v.is_finite()) {
        return Err(Error::FitUnstable { r_squared: 0.0, detail: "vanishing or non-finite increment".into() });
    }
    let lh: Vec<f64> = increments.iter().map(|(h, _)| h.ln()).collect();
    let lv: Vec<f64> = increments.iter().map(|(_, v)| v.abs().ln()).collect();
    let lvl: Vec<f64> = increments.iter().map(|(h, v)| (v.abs() / (2.0 + 1.0 / h).ln()).ln()).collect();
    let pf = linear_fit(&lh, &lv);
    let lf = linear_fit(&lh, &lvl);
    let model = if predicted_integer && lf.r_squared > pf.r_squared { FitModel::PowerLog } else { FitModel::Power };
    let r2 = match model {
        FitModel::Power => pf.r_squared,
        FitModel::PowerLog => lf.r_squared,
    };
    if r2 < 0.98 {
        return Err(Error::FitUnstable { r_squared: r2, detail: format!("increment slope {:.4}", pf.slope) });
    }
    let hs: Vec<f64> = increments.iter().map(|(h, _)| *h).collect();
    let lo = hs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = hs.iter().cloned().fold(0.0, f64::max);
    Ok(HolderFit {
        exponent: pf.slope,
        window: (lo, hi),
        r_squared: r2,
        modulus_model: model,
        log_exponent: lf.slope,
        log_r_squared: lf.r_squared,
        saturated: pf.slope >= 0.98,
        increments: increments.to_vec(),
    })
}

/// Hölder fit of |f(x0 + h·dir) − f(x0)| over the increments `window`.
pub fn holder_exponent_fit<F: Fn(&[f64]) -> Result<f64>>(
    f: F,
    x0: &[f64],
    direction: &[f64],
    window: &[f64],
    predicted_integer: bool,
) -> Result<HolderFit> {
    let nd = norm(direction);
    let f0 = f(x0)?;
    let mut inc = Vec::with_capacity(window.len());
    for h in window {
        let x: Vec<f64> = x0.iter().zip(direction).map(|(a, b)| a + h * b / nd).collect();
        inc.push((*h, f(&x)? - f0));
    }
    fit_increments(&inc, predicted_integer)
}

/// `n` log-spaced increments in `[lo, hi]`.
pub fn log_window(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1).max(1) as f64)).collect()
}

/// V(x) of the product Cauchy model in closed form, 1 / (2π(|x₁| + |x₂|)).
pub fn product_cauchy_potential(x: &[f64]) -> f64 {
    1.0 / (TAU * (x[0].abs() + x[1].abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn isotropic_and_product_values() {
        let iso = presets::isotropic_cauchy().unwrap();
        let v = potential_direction(&iso, &[1.0, 0.0]);
        assert!((v - 1.0 / TAU).abs() < 1e-9, "{v}");
        let v = potential(&iso, &[2.0, 0.0]).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-3 * v);
        let prod = presets::product_cauchy(2).unwrap();
        let v = potential_direction(&prod, &[1.0, 0.0]);
        assert!((v - 1.0 / TAU).abs() < 1e-8, "{v}");
        let s = 0.5f64.sqrt();
        let v = potential_direction(&prod, &[s, s]);
        assert!((v - 1.0 / (TAU * 2f64.sqrt())).abs() < 1e-8, "{v}");
        assert_eq!(potential(&prod, &[0.0, 0.0]), Err(Error::OriginSingularity));
    }

    #[test]
    fn planar_alpha_one_identity() {
        // in d = 2 and α = 1, V(θ) = 1 / (2π Φ(θ⊥))
        let m = presets::axis_product(2, 1.0, 0.37).unwrap();
        for th in [0.1, 0.7, 1.3] {
            let v = potential_direction(&m, &[f64::cos(th), f64::sin(th)]);
            let perp = [-f64::sin(th), f64::cos(th)];
            let e = 1.0 / (TAU * crate::symbol::char_exponent(&m, &perp));
            assert!((v - e).abs() < 1e-8 * e, "{v} vs {e}");
        }
    }

    #[test]
    fn scaling_identities() {
        let m = presets::axis_product(2, 1.4, 0.3).unwrap();
        let x = [0.4, 0.9];
        let v1 = potential(&m, &x).unwrap();
        let v2 = potential(&m, &[0.8, 1.8]).unwrap();
        assert!((v2 * 2f64.powf(2.0 - 1.4) - v1).abs() < 1e-8 * v1);
        let d1 = potential_derivative(&m, &x, &[1, 0]).unwrap();
        let d2 = potential_derivative(&m, &[1.2, 2.7], &[1, 0]).unwrap();
        assert!((d2.value * 3f64.powf(2.0 - 1.4 + 1.0) - d1.value).abs() < 1e-6 * d1.value.abs());
        assert!(!d1.out_of_theorem);
    }

    #[test]
    fn derivative_of_product_closed_form() {
        let prod = presets::product_cauchy(2).unwrap();
        let d = potential_derivative(&prod, &[1.0, 1.0], &[1, 0]).unwrap();
        assert!((d.value + 1.0 / (8.0 * PI)).abs() < 1e-2 / (8.0 * PI), "{}", d.value);
        assert!(d.out_of_theorem);
        let iso = presets::isotropic_cauchy().unwrap();
        let d = potential_derivative(&iso, &[0.0, 1.5], &[1, 0]).unwrap();
        assert!(d.value.abs() < 1e-10);
    }

    #[test]
    fn diverging_direction_is_infinite() {
        // γ = 1 ≤ d − 2α: V blows up along the atoms
        let m = presets::axis_product(2, 0.4, 0.25).unwrap();
        assert!(potential_direction(&m, &[1.0, 0.0]).is_infinite());
    }

    #[test]
    fn table_and_measure_potential() {
        let prod = presets::product_cauchy(2).unwrap();
        let t = potential_table(&prod).unwrap();
        for th in [0.01, 0.5, 1.0, 1.56, 2.0, 3.1, 4.0] {
            let x = [f64::cos(th), f64::sin(th)];
            let e = product_cauchy_potential(&x);
            assert!((t.eval(1.0, &x) - e).abs() < 1e-7 * e);
        }
        for k in 0..997 {
            let th = k as f64 * 0.0063;
            let (f, e) = (t.eval_angle_fast(th), t.eval_angle(th));
            assert!((f - e).abs() < 1e-9 * e);
        }
        let iso = presets::isotropic_cauchy().unwrap();
        let w = vec![(vec![1.0, 0.0], 0.5), (vec![-1.0, 0.0], 0.5)];
        let v = potential_of_measure(&iso, &w, &[3.0, 0.0]).unwrap();
        assert!((v - 3.0 / (16.0 * PI)).abs() < 1e-6);
        assert!(matches!(potential_of_measure(&iso, &w, &[1.0, 0.0]), Err(Error::SupportHit { .. })));
    }

    #[test]
    fn holder_fits() {
        let lin = holder_exponent_fit(|x: &[f64]| Ok(3.0 * x[0] - x[1]), &[0.2, 0.1], &[1.0, 0.0], &log_window(1e-3, 1e-1, 8), false).unwrap();
        assert!((lin.exponent - 1.0).abs() < 1e-9 && lin.saturated);
        let kink = holder_exponent_fit(|x: &[f64]| Ok(product_cauchy_potential(x)), &[0.0, 1.0], &[1.0, 0.0], &log_window(1e-4, 1e-2, 8), true).unwrap();
        assert!((kink.exponent - 1.0).abs() < 0.05);
        let rough = holder_exponent_fit(|x: &[f64]| Ok(x[0].abs().powf(0.3)), &[0.0, 0.0], &[1.0, 0.0], &log_window(1e-4, 1e-2, 8), false).unwrap();
        assert!((rough.exponent - 0.3).abs() < 1e-9 && !rough.saturated);
    }
}
