//! Tiny helpers for points stored as `&[f64]`.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Angle of a planar vector in `[0, 2π)`.
#[inline]
pub fn angle(v: &[f64]) -> f64 {
    let a = v[1].atan2(v[0]);
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

/// Orthonormal frame `(e1, e2, e3)` of ℝ³ with `e1` along `v` (|v| > 0).
pub fn frame3(v: &[f64]) -> [[f64; 3]; 3] {
    let n = norm(v);
    let e1 = [v[0] / n, v[1] / n, v[2] / n];
    let pick = if e1[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let p = dot(&pick, &e1);
    let mut e2 = [pick[0] - p * e1[0], pick[1] - p * e1[1], pick[2] - p * e1[2]];
    let n2 = norm(&e2);
    for c in e2.iter_mut() {
        *c /= n2;
    }
    let e3 = [
        e1[1] * e2[2] - e1[2] * e2[1],
        e1[2] * e2[0] - e1[0] * e2[2],
        e1[0] * e2[1] - e1[1] * e2[0],
    ];
    [e1, e2, e3]
}

/// Extreme eigenvalues `(min, max)` of a symmetric 2×2 or 3×3 matrix in row-major form.
pub fn sym_eig_extremes(m: &[f64], d: usize) -> (f64, f64) {
    match d {
        2 => {
            let (a, b, c) = (m[0], m[1], m[3]);
            let tr = 0.5 * (a + c);
            let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            (tr - r, tr + r)
        }
        3 => {
            // Trigonometric solution for symmetric 3×3 matrices.
            let (a11, a12, a13, a22, a23, a33) = (m[0], m[1], m[2], m[4], m[5], m[8]);
            let p1 = a12 * a12 + a13 * a13 + a23 * a23;
            let q = (a11 + a22 + a33) / 3.0;
            if p1 <= 1e-300 {
                let v = [a11, a22, a33];
                let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                return (lo, hi);
            }
            let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let b = [
                (a11 - q) / p,
                a12 / p,
                a13 / p,
                a12 / p,
                (a22 - q) / p,
                a23 / p,
                a13 / p,
                a23 / p,
                (a33 - q) / p,
            ];
            let det = b[0] * (b[4] * b[8] - b[5] * b[7]) - b[1] * (b[3] * b[8] - b[5] * b[6])
                + b[2] * (b[3] * b[7] - b[4] * b[6]);
            let r = (det / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            (e3, e1)
        }
        _ => panic!("unsupported dimension {d}"),
    }
}
