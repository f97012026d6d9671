use std::f64::consts::PI;

use anistable::measure::{nu_ball, RawSpectral};
use anistable::potential::potential;
use anistable::symbol::char_exponent;
use anistable::ModelParams;
use proptest::prelude::*;

fn model(alpha: f64, atoms: &[(f64, f64)]) -> ModelParams {
    let raw = RawSpectral::Atomic(
        atoms.iter().flat_map(|&(t, w)| [(vec![t.cos(), t.sin()], w), (vec![-t.cos(), -t.sin()], w)]).collect(),
    );
    ModelParams::from_raw(2, alpha, &raw).unwrap()
}

/// Two or three atom pairs with angles kept apart so μ is nondegenerate.
fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (0.0..PI / 2.0, 0.3..1.2f64, 0.1..2.0f64, 0.1..2.0f64, prop::option::of((0.0..PI, 0.1..2.0f64))).prop_map(
        |(t0, gap, w0, w1, extra)| {
            let mut v = vec![(t0, w0), (t0 + gap, w1)];
            v.extend(extra);
            v
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_is_even_and_homogeneous(alpha in 0.2..1.9f64, a in atoms(), u in prop::array::uniform2(-5.0..5.0f64), k in 0.05..20.0f64) {
        let m = model(alpha, &a);
        let p = char_exponent(&m, &u);
        prop_assert!(p >= 0.0);
        prop_assert!((char_exponent(&m, &[-u[0], -u[1]]) - p).abs() <= 1e-12 * p.max(1e-300));
        let pk = char_exponent(&m, &[k * u[0], k * u[1]]);
        prop_assert!((pk - k.powf(alpha) * p).abs() <= 1e-11 * pk.max(1e-300));
    }

    #[test]
    fn ball_mass_is_symmetric_and_monotone(alpha in 0.2..1.9f64, a in atoms(), x in prop::array::uniform2(-3.0..3.0f64), f in 0.1..0.9f64) {
        let m = model(alpha, &a);
        let n = x[0].hypot(x[1]);
        prop_assume!(n > 1e-3);
        let big = nu_ball(&m, &x, f * n);
        let small = nu_ball(&m, &x, 0.5 * f * n);
        prop_assert!(small <= big + 1e-15);
        let minus = nu_ball(&m, &[-x[0], -x[1]], f * n);
        prop_assert!((minus - big).abs() <= 1e-12 * big.max(1e-300));
    }

    #[test]
    fn potential_is_even_and_positive(a in atoms(), x in prop::array::uniform2(-3.0..3.0f64)) {
        let m = model(1.3, &a);
        prop_assume!(x[0].hypot(x[1]) > 1e-2);
        let v = potential(&m, &x).unwrap();
        prop_assert!(v > 0.0);
        let w = potential(&m, &[-x[0], -x[1]]).unwrap();
        prop_assert!((v - w).abs() <= 1e-9 * v);
    }
}
