//! The one-dimensional transform
//!
//! `E_n(z) = ∫_0^∞ ρ^{n−1} e^{iρz} e^{−ρ^α} dρ`,
//!
//! through which every pointwise density value reduces to an integral over the
//! sphere. It satisfies `E_n(−z) = conj E_n(z)` and `dE_n/dz = i E_{n+1}`.
//! For α = 1 it is `Γ(n) / (1 − iz)^n`; otherwise it is tabulated on `[0, 30]`
//! with cubic Hermite interpolation (nodes by a rotated-contour double
//! exponential rule) and continued by its asymptotic series beyond.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use statrs::function::gamma::{gamma, ln_gamma};

/// Highest order `n` supported (d = 3 with third derivatives needs 6, plus one for the slope).
pub const MAX_ORDER: usize = 8;
const Z_ASYM: f64 = 30.0;
const MAX_TABLE_NODES: usize = 120_000;
const DE_H: f64 = 1.0 / 32.0;
const DE_LO: f64 = -4.5;
const DE_HI: f64 = 40.0;

struct Table {
    h: f64,
    val: Vec<Complex64>,
    der: Vec<Complex64>,
}

pub struct RadialKernel {
    alpha: f64,
    tables: Vec<OnceLock<Option<Table>>>,
    asym: Vec<OnceLock<Vec<(f64, Complex64)>>>,
}

impl std::fmt::Debug for RadialKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialKernel").field("alpha", &self.alpha).finish()
    }
}

/// Shared kernel for a given α.
pub fn kernel(alpha: f64) -> Arc<RadialKernel> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<RadialKernel>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut g = cache.lock().unwrap();
    g.entry(alpha.to_bits()).or_insert_with(|| Arc::new(RadialKernel::new(alpha))).clone()
}

impl RadialKernel {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 2.0);
        RadialKernel {
            alpha,
            tables: (0..=MAX_ORDER + 1).map(|_| OnceLock::new()).collect(),
            asym: (0..=MAX_ORDER + 2).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `E_n(z)` for `1 ≤ n ≤ MAX_ORDER`.
    pub fn eval(&self, n: usize, z: f64) -> Complex64 {
        assert!((1..=MAX_ORDER).contains(&n), "order {n} out of range");
        if z < 0.0 {
            return self.eval(n, -z).conj();
        }
        if z == 0.0 {
            return Complex64::new((ln_gamma(n as f64 / self.alpha)).exp() / self.alpha, 0.0);
        }
        if self.alpha == 1.0 {
            return Complex64::new(gamma(n as f64), 0.0) / Complex64::new(1.0, -z).powi(n as i32);
        }
        if z >= Z_ASYM {
            return self.asymptotic(n, z);
        }
        match self.table(n) {
            Some(t) => t.interp(z),
            None => contour_pair(self.alpha, n, z).0,
        }
    }

    fn table(&self, n: usize) -> Option<&Table> {
        self.tables[n]
            .get_or_init(|| {
                let a = self.alpha;
                // h⁴/384 · max|E_{n+4}| ≤ 1e-12 · E_n(0), with |E_k| ≤ Γ(k/α)/α
                let ratio = (ln_gamma(n as f64 / a) - ln_gamma((n as f64 + 4.0) / a)).exp();
                let h = (384e-12 * ratio).powf(0.25).min(0.01);
                let nodes = (Z_ASYM / h).ceil() as usize + 1;
                if nodes > MAX_TABLE_NODES {
                    return None;
                }
                let h = Z_ASYM / (nodes - 1) as f64;
                let mut val = Vec::with_capacity(nodes);
                let mut der = Vec::with_capacity(nodes);
                for k in 0..nodes {
                    let (e, e1) = contour_pair(a, n, k as f64 * h);
                    val.push(e);
                    der.push(Complex64::i() * e1);
                }
                Some(Table { h, val, der })
            })
            .as_ref()
    }

    fn asymptotic(&self, n: usize, z: f64) -> Complex64 {
        let coefs = self.asym[n].get_or_init(|| asymptotic_coefficients(self.alpha, n));
        let lz = z.ln();
        let mut s = Complex64::new(0.0, 0.0);
        let mut prev = f64::INFINITY;
        for (p, c) in coefs {
            let term = c * (-p * lz).exp();
            let mag = term.norm();
            if mag > prev {
                break;
            }
            s += term;
            if mag < 1e-17 * s.norm() {
                break;
            }
            prev = mag;
        }
        s
    }
}

impl Table {
    fn interp(&self, z: f64) -> Complex64 {
        let t = z / self.h;
        let k = (t.floor() as usize).min(self.val.len() - 2);
        let s = t - k as f64;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.val[k] * h00 + self.der[k] * (h10 * self.h) + self.val[k + 1] * h01 + self.der[k + 1] * (h11 * self.h)
    }
}

/// Terms `(p_k, c_k)` of `E_n(z) ~ Σ c_k z^{−p_k}`, truncated at the smallest term at `z = 30`.
fn asymptotic_coefficients(alpha: f64, n: usize) -> Vec<(f64, Complex64)> {
    let lz = Z_ASYM.ln();
    let mut out = Vec::new();
    let mut prev = f64::INFINITY;
    let mut first = 0.0;
    for k in 0..2000 {
        let p = n as f64 + alpha * k as f64;
        let lmag = ln_gamma(p) - ln_gamma(k as f64 + 1.0);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let c = Complex64::from_polar(sign * lmag.exp(), FRAC_PI_2 * p);
        let at_edge = (lmag - p * lz).exp();
        if k == 0 {
            first = at_edge;
        }
        if at_edge > prev {
            break;
        }
        out.push((p, c));
        if at_edge < 1e-19 * first {
            break;
        }
        prev = at_edge;
    }
    out
}

/// `(E_n(z), E_{n+1}(z))` for `z ≥ 0` by rotating the ray to arg ρ = π/(4 max(α,1))
/// and applying the trapezoid rule after `t = t₀ exp(s − e^{−s})`, which decays
/// double exponentially at the origin and keeps a uniform strip of analyticity at infinity.
pub fn contour_pair(alpha: f64, n: usize, z: f64) -> (Complex64, Complex64) {
    let phi = PI / (4.0 * alpha.max(1.0));
    let (sp, cp) = phi.sin_cos();
    let (sa, ca) = (alpha * phi).sin_cos();
    let t0 = 1.0 / (1.0 + z);
    let lt0 = t0.ln();
    let nf = n as f64;
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = Complex64::new(0.0, 0.0);
    let steps = ((DE_HI - DE_LO) / DE_H).round() as i64;
    for k in 0..=steps {
        let s = DE_LO + k as f64 * DE_H;
        let em = (-s).exp();
        let lt = lt0 + s - em;
        let t = lt.exp();
        let ta = (alpha * lt).exp();
        let re = nf * lt + em.ln_1p() - t * z * sp - ta * ca;
        if re < -745.0 {
            if s > 0.0 && t > 1.0 {
                break;
            }
            continue;
        }
        let im = t * z * cp - ta * sa;
        let e = Complex64::from_polar(re.exp(), im);
        s0 += e;
        s1 += e * t;
    }
    let r0 = Complex64::from_polar(DE_H, nf * phi);
    let r1 = Complex64::from_polar(DE_H, (nf + 1.0) * phi);
    (s0 * r0, s1 * r1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed(n: usize, z: f64) -> Complex64 {
        Complex64::new(gamma(n as f64), 0.0) / Complex64::new(1.0, -z).powi(n as i32)
    }

    #[test]
    fn contour_matches_cauchy_closed_form() {
        for n in 1..=6 {
            for z in [0.0, 0.3, 1.0, 4.0, 17.0, 29.9] {
                let (e, e1) = contour_pair(1.0, n, z);
                let c = closed(n, z);
                assert!((e - c).norm() < 1e-13 * c.norm().max(1e-300), "n={n} z={z}: {e} vs {c}");
                let c1 = closed(n + 1, z);
                assert!((e1 - c1).norm() < 1e-13 * c1.norm());
            }
        }
    }

    #[test]
    fn value_at_zero_is_gamma_ratio() {
        for a in [0.5, 0.8, 1.3, 1.7] {
            for n in 2..=4 {
                let (e, _) = contour_pair(a, n, 0.0);
                let exact = gamma(n as f64 / a) / a;
                assert!((e.re - exact).abs() < 1e-12 * exact && e.im.abs() < 1e-12 * exact);
            }
        }
    }

    #[test]
    fn table_and_asymptotics_agree_with_contour() {
        for a in [0.8, 1.2, 1.5] {
            let k = RadialKernel::new(a);
            for n in 2..=4 {
                let scale = gamma(n as f64 / a) / a;
                for z in [0.0, 0.0137, 0.77, 3.3, 12.5, 29.99] {
                    let exact = contour_pair(a, n, z).0;
                    assert!((k.eval(n, z) - exact).norm() < 1e-10 * scale, "a={a} n={n} z={z}");
                    assert_eq!(k.eval(n, -z), k.eval(n, z).conj());
                }
                for z in [30.0, 45.0] {
                    let exact = contour_pair(a, n, z).0;
                    let approx = k.asymptotic(n, z);
                    assert!((approx - exact).norm() < 1e-9 * exact.norm(), "a={a} n={n} z={z}: {approx} {exact}");
                }
            }
        }
    }

    #[test]
    fn derivative_identity() {
        let a = 1.4;
        let n = 3;
        let z = 2.2;
        let h = 1e-4;
        let d = (contour_pair(a, n, z + h).0 - contour_pair(a, n, z - h).0) / (2.0 * h);
        let e1 = contour_pair(a, n, z).1;
        assert!((d - Complex64::i() * e1).norm() < 1e-7);
    }
}
