//! Shift-operator products against a pointwise double-sum oracle.

use std::collections::BTreeMap;
use std::sync::Arc;

use ellcomm_core::expr::Affine;
use ellcomm_core::shift::{commutator_residual, make_bpn, make_vn, op_equal, shift_mul};
use ellcomm_core::{Complex64, MeroExpr, ShiftAlgebra, ShiftOp, ThetaContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_coeff(vars: usize, rng: &mut ChaCha8Rng) -> MeroExpr {
    let v = rng.random_range(0..vars);
    let w = rng.random_range(0..vars);
    let shift = c(rng.random::<f64>(), rng.random::<f64>() * 0.5);
    let scale = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let num = MeroExpr::theta1(Affine::var(v) + shift) * MeroExpr::exp2pi(Affine::term(w, c(0.5, 0.0)));
    let den = MeroExpr::theta1(Affine::var(w) - c(0.23, 0.11));
    num / den * scale
}

fn random_op(alg: &Arc<ShiftAlgebra>, rng: &mut ChaCha8Rng) -> ShiftOp {
    let terms: Vec<_> = (0..3)
        .map(|_| {
            let m: Vec<u32> = (0..alg.gens()).map(|_| rng.random_range(0..2)).collect();
            (m, random_coeff(alg.vars(), rng))
        })
        .collect();
    ShiftOp::from_terms(alg, terms).unwrap()
}

// (ab)_K(z) = Σ_{m+k=K} a_m(z) b_k(z + T_m)
fn oracle_product_at(a: &ShiftOp, b: &ShiftOp, z: &[Complex64]) -> BTreeMap<Vec<u32>, Complex64> {
    let alg = a.algebra();
    let ctx = alg.ctx();
    let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    for (m, f) in a.terms() {
        let shift = alg.translation(m);
        let zs: Vec<Complex64> = z.iter().zip(&shift).map(|(x, s)| x + s).collect();
        for (k, g) in b.terms() {
            let key: Vec<u32> = m.iter().zip(k).map(|(x, y)| x + y).collect();
            *out.entry(key).or_default() += f.eval(z, ctx).unwrap() * g.eval(&zs, ctx).unwrap();
        }
    }
    out
}

#[test]
fn product_matches_pointwise_oracle() {
    let ctx = ThetaContext::with_defaults(2);
    for alg in [make_vn(2, &ctx).unwrap(), make_bpn(2, 3, &ctx).unwrap()] {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_op(&alg, &mut rng);
            let b = random_op(&alg, &mut rng);
            let ab = shift_mul(&a, &b).unwrap();
            let z = vec![c(0.41, 0.37), c(0.13, 0.52)];
            let expected = oracle_product_at(&a, &b, &z);
            for (key, v) in &expected {
                let got = ab.coeff(key).map(|f| f.eval(&z, &ctx).unwrap()).unwrap_or_default();
                assert!((got - v).norm() <= 1e-11 * 1f64.max(v.norm()), "seed {seed} {key:?}: {got} vs {v}");
            }
            for key in ab.terms().keys() {
                assert!(expected.contains_key(key));
            }
        }
    }
}

#[test]
fn product_is_associative() {
    let ctx = ThetaContext::with_defaults(3);
    let alg = make_vn(2, &ctx).unwrap();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, d) = (random_op(&alg, &mut rng), random_op(&alg, &mut rng), random_op(&alg, &mut rng));
        let left = shift_mul(&shift_mul(&a, &b).unwrap(), &d).unwrap();
        let right = shift_mul(&a, &shift_mul(&b, &d).unwrap()).unwrap();
        assert!(op_equal(&left, &right, 5, seed).unwrap() < 1e-11);
    }
}

#[test]
fn generator_moves_variable() {
    // f_1 z_1 = (z_1 − nη) f_1 in V_n
    let ctx = ThetaContext::with_defaults(2);
    let alg = make_vn(2, &ctx).unwrap();
    let f = ShiftOp::generator(&alg, 0).unwrap();
    let z = ShiftOp::function(&alg, MeroExpr::var(0));
    let lhs = shift_mul(&f, &z).unwrap();
    let rhs = shift_mul(&ShiftOp::function(&alg, MeroExpr::var(0) - MeroExpr::constant(ctx.eta() * 2.0)), &f).unwrap();
    assert!(op_equal(&lhs, &rhs, 5, 1).unwrap() < 1e-14);
    assert!(commutator_residual(&f, &z, 5, 1).unwrap() > 1e-2);
}

#[test]
fn distinct_algebras_do_not_mix() {
    let ctx = ThetaContext::with_defaults(2);
    let a = ShiftOp::one(&make_vn(2, &ctx).unwrap());
    let b = ShiftOp::one(&make_vn(3, &ctx).unwrap());
    assert!(shift_mul(&a, &b).is_err());
}
