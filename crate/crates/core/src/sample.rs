//! Seeded, pole-guarded sampling of points in the fundamental box.
//!
//! Draw number `k` comes from its own ChaCha stream `(seed, k)`, so the
//! point list depends only on the seed and never on scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::context::ThetaContext;
use crate::error::{Error, Result};
use crate::expr::MeroExpr;

/// Maximum draws per requested point before giving up.
pub const MAX_DRAWS_PER_POINT: usize = 1000;

/// The `index`-th raw draw for `seed`: `dim` points uniform in
/// `Re ∈ [0,1)`, `Im ∈ [0, Im τ)`.
pub fn raw_draw(seed: u64, index: u64, dim: usize, ctx: &ThetaContext) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let height = ctx.tau().im;
    (0..dim)
        .map(|_| {
            let re: f64 = rng.random();
            let im: f64 = rng.random();
            Complex64::new(re, im * height)
        })
        .collect()
}

/// `count` assignments of `dim` variables, rejecting any draw where a
/// guard expression is smaller than the pole guard or fails to evaluate.
pub fn sample_points(
    count: usize,
    dim: usize,
    guards: &[MeroExpr],
    seed: u64,
    ctx: &ThetaContext,
) -> Result<Vec<Vec<Complex64>>> {
    if count == 0 || dim == 0 {
        return Err(Error::InvalidParameter("count and dim must be at least 1".into()));
    }
    let budget = MAX_DRAWS_PER_POINT * count;
    let mut out = Vec::with_capacity(count);
    let mut draws = 0;
    while out.len() < count {
        if draws >= budget {
            return Err(Error::SamplingExhausted {
                draws,
                accepted: out.len(),
                requested: count,
            });
        }
        let point = raw_draw(seed, draws as u64, dim, ctx);
        draws += 1;
        if accepts(&point, guards, ctx) {
            out.push(point);
        }
    }
    Ok(out)
}

fn accepts(point: &[Complex64], guards: &[MeroExpr], ctx: &ThetaContext) -> bool {
    guards.iter().all(|g| match g.eval(point, ctx) {
        Ok(v) => v.norm() >= ctx.pole_guard() && v.norm().is_finite(),
        Err(_) => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Affine;

    #[test]
    fn single_point_in_box() {
        let ctx = ThetaContext::with_defaults(1);
        let pts = sample_points(1, 3, &[], 7, &ctx).unwrap();
        assert_eq!(pts.len(), 1);
        for z in &pts[0] {
            assert!((0.0..1.0).contains(&z.re));
            assert!(z.im >= 0.0 && z.im < ctx.tau().im);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let ctx = ThetaContext::with_defaults(1);
        let a = sample_points(5, 2, &[], 42, &ctx).unwrap();
        let b = sample_points(5, 2, &[], 42, &ctx).unwrap();
        assert_eq!(a, b);
        let c = sample_points(5, 2, &[], 43, &ctx).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn guard_rejects_coincidences() {
        let ctx = ThetaContext::with_defaults(1);
        let g = MeroExpr::theta1(Affine::var(0) - Affine::var(1));
        let pts = sample_points(50, 2, std::slice::from_ref(&g), 3, &ctx).unwrap();
        for p in pts {
            assert!(g.eval(&p, &ctx).unwrap().norm() >= ctx.pole_guard());
        }
    }

    #[test]
    fn identically_zero_guard_exhausts() {
        let ctx = ThetaContext::with_defaults(1);
        let g = MeroExpr::theta1(Affine::var(0) - Affine::var(0));
        let err = sample_points(2, 1, &[g], 1, &ctx).unwrap_err();
        assert!(matches!(err, Error::SamplingExhausted { draws: 2000, .. }));
    }
}
