//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared cached rule of order `n`.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = cache.lock().unwrap();
        g.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Mapped nodes and weights for `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, w * h))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 7–15 panel: `(kronrod, |kronrod - gauss|, ∫|f|)`.
pub fn gk15<F: FnMut(f64) -> f64>(a: f64, b: f64, f: &mut F) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    let mut ra = fc.abs() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        rk += WGK[j] * (f1 + f2);
        ra += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    (rk * h, ((rk - rg) * h).abs(), ra * h.abs())
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error: f64,
    pub l1: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
    l1: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive GK15 over the sorted breakpoints `pts` (at least two).
/// Stops when the error estimate is below `max(abs_tol, rel_tol * ∫|f|)`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    pts: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> AdaptiveResult {
    let mut heap = BinaryHeap::new();
    let (mut val, mut err, mut l1) = (0.0, 0.0, 0.0);
    let mut evals = 0;
    for w in pts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e, a) = gk15(w[0], w[1], &mut f);
        evals += 15;
        val += v;
        err += e;
        l1 += a;
        heap.push(Panel { a: w[0], b: w[1], val: v, err: e, l1: a });
    }
    while err > abs_tol.max(rel_tol * l1) && heap.len() < max_panels {
        let p = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(Panel { err: 0.0, ..p });
            continue;
        }
        let (v1, e1, a1) = gk15(p.a, m, &mut f);
        let (v2, e2, a2) = gk15(m, p.b, &mut f);
        evals += 30;
        val += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        l1 += a1 + a2 - p.l1;
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1, l1: a1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2, l1: a2 });
    }
    // Re-sum to clear accumulated rounding from the running updates.
    let (mut v, mut e, mut a) = (0.0, 0.0, 0.0);
    for p in heap.iter() {
        v += p.val;
        e += p.err;
        a += p.l1;
    }
    let _ = (val, err, l1);
    AdaptiveResult { value: v, error: e, l1: a, evaluations: evals }
}

/// Sort, clip to `[lo, hi]` and deduplicate breakpoints, always keeping the ends.
pub fn breakpoints(lo: f64, hi: f64, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = extra.into_iter().filter(|x| *x > lo && *x < hi).collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    let scale = (hi - lo).abs().max(1e-300);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * scale);
    if *v.last().unwrap() != hi {
        *v.last_mut().unwrap() = hi;
    }
    v
}

/// Nodes and weights on `[a, b]` graded toward both ends: each half is mapped
/// by `u ↦ u^q` from the endpoint (exponent `qa` at `a`, `qb` at `b`) and
/// integrated with an `n`-point Gauss–Legendre rule.
pub fn graded(a: f64, b: f64, qa: f64, qb: f64, n: usize) -> Vec<(f64, f64)> {
    let g = GaussLegendre::cached(n);
    let half = 0.5 * (b - a);
    let mut out = Vec::with_capacity(2 * n);
    for (u, w) in g.mapped(0.0, 1.0) {
        out.push((a + half * u.powf(qa), w * half * qa * u.powf(qa - 1.0)));
    }
    for (u, w) in g.mapped(0.0, 1.0) {
        out.push((b - half * u.powf(qb), w * half * qb * u.powf(qb - 1.0)));
    }
    out
}
