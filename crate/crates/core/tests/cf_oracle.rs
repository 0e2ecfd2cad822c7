//! Determinants and Plücker identities against brute-force oracles.

use ellcomm_core::cf::{
    cf_det_row_order, delta_family, gaussian, plucker_arity, plucker_residual, random_vector, verify_commuting_family,
    verify_triangle, AlternatingForm,
};
use ellcomm_core::{cf_det, CFMatrix, Complex64, Ring, TensorBackend};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Mat = DMatrix<Complex64>;

// Leibniz expansion written out by hand for n = 2, 3.
fn leibniz(tb: &TensorBackend, g: &[Vec<Mat>]) -> Mat {
    let perms: &[(&[usize], f64)] = match g.len() {
        2 => &[(&[0, 1], 1.0), (&[1, 0], -1.0)],
        3 => &[
            (&[0, 1, 2], 1.0),
            (&[0, 2, 1], -1.0),
            (&[1, 0, 2], -1.0),
            (&[1, 2, 0], 1.0),
            (&[2, 0, 1], 1.0),
            (&[2, 1, 0], -1.0),
        ],
        _ => unreachable!(),
    };
    let mut acc = tb.zero();
    for (p, s) in perms {
        let mut t = tb.one();
        for (r, &c) in p.iter().enumerate() {
            t = &t * &g[r][c];
        }
        acc += t * Complex64::new(*s, 0.0);
    }
    acc
}

fn row_grid(tb: &TensorBackend, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Mat>> {
    (0..rows)
        .map(|r| (0..cols).map(|_| tb.random_at(r, rng).unwrap()).collect())
        .collect()
}

fn rel(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

#[test]
fn det_matches_leibniz_oracle() {
    for n in [2, 3] {
        let tb = TensorBackend::new(2, n).unwrap();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = row_grid(&tb, n, n, &mut rng);
            assert!(rel(&cf_det(&tb, &g).unwrap(), &leibniz(&tb, &g)) < 1e-13);
        }
    }
}

#[test]
fn det_independent_of_row_order_for_commuting_rows() {
    let tb = TensorBackend::new(2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = row_grid(&tb, 3, 3, &mut rng);
    let base = cf_det(&tb, &g).unwrap();
    for order in [[2, 1, 0], [1, 0, 2], [0, 2, 1]] {
        assert!(rel(&cf_det_row_order(&tb, &g, &order).unwrap(), &base) < 1e-13);
    }
}

#[test]
fn row_order_matters_without_commutation() {
    // every entry on site 0, so rows do not commute
    let tb = TensorBackend::new(2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g: Vec<Vec<Mat>> = (0..2).map(|_| (0..2).map(|_| tb.random_at(0, &mut rng).unwrap()).collect()).collect();
    let a = cf_det_row_order(&tb, &g, &[0, 1]).unwrap();
    let b = cf_det_row_order(&tb, &g, &[1, 0]).unwrap();
    assert!(rel(&a, &b) > 1e-3);
}

#[test]
fn commuting_family_on_twenty_seeds() {
    for (n, k) in [(2, 2), (2, 3), (3, 2)] {
        let tb = TensorBackend::new(k, n).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = CFMatrix::new(row_grid(&tb, n, n + 1, &mut rng)).unwrap();
            assert_eq!(m.row_commutation_residual(&tb), 0.0);
            let r = verify_commuting_family(&tb, &m).unwrap();
            assert!(r <= 1e-9, "(n={n},k={k}) seed {seed}: {r:e}");
            for i in 0..=n {
                for j in i + 1..=n {
                    assert!(verify_triangle(&tb, &m, i, j).unwrap() <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn family_fails_without_row_commutation() {
    let tb = TensorBackend::new(2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g: Vec<Vec<Mat>> = (0..2).map(|_| (0..3).map(|_| tb.random_at(0, &mut rng).unwrap()).collect()).collect();
    let m = CFMatrix::new(g).unwrap();
    assert!(verify_commuting_family(&tb, &m).unwrap() > 1e-3);
}

#[test]
fn delta_family_with_commuting_columns() {
    let n = 2;
    let tb = TensorBackend::new(2, n).unwrap();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // column j lives on site j
        let f: Vec<Vec<Mat>> = (0..=n).map(|_| (0..n).map(|j| tb.random_at(j, &mut rng).unwrap()).collect()).collect();
        assert!(delta_family(&tb, &f).unwrap() <= 1e-9);
    }
}

// Σ_σ sign(σ) Π_r (w_r · v_{σ(r)})
fn antisymmetrized(w: &[Vec<Complex64>], v: &[&[Complex64]]) -> Complex64 {
    let k = w.len();
    ellcomm_core::cf::permutations_with_sign(k)
        .into_iter()
        .map(|(p, s)| {
            let prod: Complex64 = (0..k)
                .map(|r| w[r].iter().zip(v[p[r]]).map(|(a, b)| a * b).sum::<Complex64>())
                .product();
            prod * s
        })
        .sum()
}

#[test]
fn form_matches_antisymmetrization_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 2..=4 {
        let w: Vec<Vec<Complex64>> = (0..k).map(|_| random_vector(6, &mut rng)).collect();
        let form = AlternatingForm::new(w.clone()).unwrap();
        let vs: Vec<Vec<Complex64>> = (0..k).map(|_| random_vector(6, &mut rng)).collect();
        let refs: Vec<&[Complex64]> = vs.iter().map(|v| v.as_slice()).collect();
        let a = form.eval(&refs).unwrap();
        let b = antisymmetrized(&w, &refs);
        assert!((a - b).norm() < 1e-12 * 1f64.max(b.norm()));
        // swapping two arguments flips the sign
        let mut swapped = refs.clone();
        swapped.swap(0, 1);
        assert!((form.eval(&swapped).unwrap() + a).norm() < 1e-12 * 1f64.max(a.norm()));
    }
}

#[test]
fn plucker_fifty_seeds_each_order() {
    for order in 2..=4 {
        let arity = plucker_arity(order).unwrap();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let form = AlternatingForm::random(order, 2 * order, &mut rng).unwrap();
            let vs: Vec<Vec<Complex64>> = (0..arity).map(|_| random_vector(2 * order, &mut rng)).collect();
            let r = plucker_residual(&form, &vs).unwrap();
            assert!(r <= 1e-10, "order {order} seed {seed}: {r:e}");
        }
    }
}

#[test]
fn gaussian_is_deterministic() {
    let a = gaussian(&mut ChaCha8Rng::seed_from_u64(2));
    let b = gaussian(&mut ChaCha8Rng::seed_from_u64(2));
    assert_eq!(a, b);
}
