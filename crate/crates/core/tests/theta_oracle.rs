//! Theta evaluations against a brute-force Fourier sum that never reduces
//! its argument.

use std::f64::consts::{PI, TAU};

use ellcomm_core::theta::{theta1, theta_basis, theta_eval, theta_odd, LatticeReduction, ThetaKind};
use ellcomm_core::{Complex64, ThetaContext};
use proptest::prelude::*;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn cexp(z: Complex64) -> Complex64 {
    z.exp()
}

// Summation range wide enough for |Im z| up to ~6 Im τ.
const M: i64 = 80;

fn naive_theta1(z: Complex64, tau: Complex64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for m in -M..=M {
        let mf = m as f64;
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        s += sign * cexp(I * TAU * (tau * (mf * (mf + 1.0) / 2.0) + z * (mf + 1.0)));
    }
    s
}

fn naive_basis(i: usize, n: usize, z: Complex64, tau: Complex64) -> Complex64 {
    let (i, nf) = (i as f64, n as f64);
    let mut s = Complex64::new(0.0, 0.0);
    for j in -M..=M {
        let jf = j as f64;
        let sign = if (j * n as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let k = i + nf * jf;
        s += sign * cexp(I * TAU * (tau * (i * jf + nf * jf * (jf - 1.0) / 2.0) + z * k));
    }
    s
}

fn naive_odd(z: Complex64, tau: Complex64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for m in -M..=M {
        let k = m as f64 + 0.5;
        s += cexp(I * PI * tau * (k * k) + I * TAU * k * (z + 0.5));
    }
    s
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

fn taus() -> [Complex64; 2] {
    [Complex64::new(0.0, 0.8), Complex64::new(0.3, 1.1)]
}

fn ctx_for(tau: Complex64, n: usize) -> ThetaContext {
    let (_, eta) = ThetaContext::default_params();
    ThetaContext::new(tau, eta, n).unwrap()
}

fn arb_point() -> impl Strategy<Value = (f64, f64, i64, i64)> {
    (0.0..1.0f64, 0.0..1.0f64, -5i64..=5, -5i64..=5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn order_one_matches_direct_sum((x, y, a, b) in arb_point(), t in 0usize..2) {
        let tau = taus()[t];
        let ctx = ctx_for(tau, 1);
        let z = Complex64::new(x, 0.0) + tau * y + a as f64 + tau * b as f64;
        prop_assert!(rel(theta1(z, &ctx).unwrap(), naive_theta1(z, tau)) < 1e-11);
    }

    #[test]
    fn basis_matches_direct_sum((x, y, a, b) in arb_point(), n in 1usize..=6, i in 0usize..6, t in 0usize..2) {
        let tau = taus()[t];
        let ctx = ctx_for(tau, n);
        let i = i % n;
        // the order-n series grows like |q|^{-n b²/2}; stay within f64 range
        let b = b.clamp(-3, 3);
        let z = Complex64::new(x, 0.0) + tau * y + a as f64 + tau * b as f64;
        prop_assert!(rel(theta_basis(i, n, z, &ctx).unwrap(), naive_basis(i, n, z, tau)) < 1e-10);
    }

    #[test]
    fn odd_matches_direct_sum((x, y, a, b) in arb_point(), t in 0usize..2) {
        let tau = taus()[t];
        let ctx = ctx_for(tau, 1);
        let z = Complex64::new(x, 0.0) + tau * y + a as f64 + tau * b as f64;
        prop_assert!(rel(theta_odd(z, &ctx).unwrap(), naive_odd(z, tau)) < 1e-11);
    }

    #[test]
    fn reduction_round_trip((x, y, a, b) in arb_point(), t in 0usize..2) {
        let tau = taus()[t];
        let z = Complex64::new(x, 0.0) + tau * y + a as f64 + tau * b as f64;
        let red = LatticeReduction::new(z, tau);
        let back = red.reduced + red.a as f64 + tau * red.b as f64;
        prop_assert!((back - z).norm() < 1e-12);
        prop_assert!(red.reduced.im >= 0.0 && red.reduced.im < tau.im);
        prop_assert!(red.reduced.re >= 0.0 && red.reduced.re < 1.0);
    }

    #[test]
    fn first_derivative_matches_central_difference(x in 0.0..1.0f64, y in -1.5..1.5f64, n in 1usize..=4) {
        let ctx = ThetaContext::with_defaults(n);
        let z = Complex64::new(x, y);
        // five-point stencil: O(h^4) so fast-oscillating |y| ~ 1.5 stays accurate
        let h = 1e-4;
        for kind in [ThetaKind::One, ThetaKind::basis(n - 1, n), ThetaKind::Odd] {
            let f = |w| theta_eval(kind, w, 0, &ctx).unwrap();
            let fd = (8.0 * (f(z + h) - f(z - h)) - (f(z + 2.0 * h) - f(z - 2.0 * h))) / (12.0 * h);
            let d = theta_eval(kind, z, 1, &ctx).unwrap();
            prop_assert!(rel(d, fd) < 1e-7, "{kind:?}: {d} vs {fd}");
        }
    }
}

#[test]
fn lattice_zeros() {
    for tau in taus() {
        let ctx = ctx_for(tau, 1);
        for a in -2..=2 {
            for b in -2..=2 {
                let w = tau * b as f64 + a as f64;
                assert!(theta1(w, &ctx).unwrap().norm() < 1e-12 * 1f64.max(naive_theta1(w + 0.5, tau).norm()));
                assert!(theta_odd(w, &ctx).unwrap().norm() < 1e-12 * 1f64.max(naive_odd(w + 0.5, tau).norm()));
            }
        }
    }
}

#[test]
fn quasi_periodicity_two_hundred_points() {
    for tau in taus() {
        for n in 1..=6 {
            let ctx = ctx_for(tau, n);
            for k in 0..200u64 {
                let z = ellcomm_core::sample::raw_draw(7, k, 1, &ctx)[0] - tau * 0.5;
                let f = |w| theta_basis(0, n, w, &ctx).unwrap();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let expected = f(z) * sign * cexp(-I * TAU * n as f64 * z);
                assert!(rel(f(z + tau), expected) < 1e-10);
                assert!(rel(f(z + 1.0), f(z)) < 1e-10);
            }
        }
    }
}

#[test]
fn oddness_relations() {
    let ctx = ThetaContext::with_defaults(1);
    let w = Complex64::new(0.37, 0.21);
    let t = theta1(w, &ctx).unwrap();
    let expected = -cexp(-I * TAU * w) * t;
    assert!(rel(theta1(-w, &ctx).unwrap(), expected) < 1e-13);
    assert!(rel(theta_odd(-w, &ctx).unwrap(), -theta_odd(w, &ctx).unwrap()) < 1e-13);
}
