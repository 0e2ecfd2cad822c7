//! Transfer operators: the determinant family `T(u)` in `V_n`, the layered
//! transfer `T̃(u)` and the auxiliary SOS transfer matrix.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cf::{minors, CFMatrix};
use crate::context::ThetaContext;
use crate::error::{Error, Result};
use crate::expr::{Affine, MeroExpr};
use crate::sample::{raw_draw, sample_points};
use crate::shift::{
    commutator_residual, make_btilde, make_sos, make_vn, op_equal, sos_gen, BtildeLayout, ShiftAlgebra,
    ShiftBackend, ShiftOp,
};
use crate::theta::{theta1, theta_basis};

/// Default number of sampled points for operator identities.
pub const DEFAULT_SAMPLES: usize = 20;

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `det[θ_j(z_i)]` for the order-`n` basis, `n = z.len()`.
pub fn theta_vandermonde_det(z: &[Complex64], ctx: &ThetaContext) -> Result<Complex64> {
    let n = z.len();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one point".into()));
    }
    let mut m = DMatrix::from_element(n, n, c0());
    for (i, zi) in z.iter().enumerate() {
        for j in 0..n {
            m[(i, j)] = theta_basis(j, n, *zi, ctx)?;
        }
    }
    Ok(m.determinant())
}

/// `det[θ_j(z_i)] / (Π_{i<j} θ(z_i − z_j) · θ(Σ z_i))`.
pub fn vandermonde_ratio(z: &[Complex64], ctx: &ThetaContext) -> Result<Complex64> {
    let mut den = theta1(z.iter().sum(), ctx)?;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            den *= theta1(z[i] - z[j], ctx)?;
        }
    }
    if den.norm() < ctx.pole_guard() {
        return Err(Error::Pole { magnitude: den.norm() });
    }
    Ok(theta_vandermonde_det(z, ctx)? / den)
}

/// Checks that the Vandermonde ratio is the exponential of an affine
/// function: `R(z+δe_k)/R(z)` must not depend on the base point `z`.
/// Returns the largest relative disagreement over `pairs` base-point pairs.
pub fn vandermonde_exp_affine_residual(n: usize, pairs: usize, seed: u64, ctx: &ThetaContext) -> Result<f64> {
    if n == 0 || pairs == 0 {
        return Err(Error::InvalidParameter("n and pairs must be positive".into()));
    }
    let mut worst = 0.0f64;
    let mut accepted = 0;
    let mut index = 0u64;
    while accepted < pairs {
        if index as usize > 1000 * pairs {
            return Err(Error::SamplingExhausted {
                draws: index as usize,
                accepted,
                requested: pairs,
            });
        }
        let draw = raw_draw(seed, index, 2 * n + 1, ctx);
        index += 1;
        let k = accepted % n;
        let delta = draw[2 * n] * 0.5;
        let (za, zb) = draw[..2 * n].split_at(n);
        let ratio_at = |base: &[Complex64]| -> Result<Complex64> {
            let mut moved = base.to_vec();
            moved[k] += delta;
            Ok(vandermonde_ratio(&moved, ctx)? / vandermonde_ratio(base, ctx)?)
        };
        let (ra, rb) = match (ratio_at(za), ratio_at(zb)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        accepted += 1;
        worst = worst.max((ra - rb).norm() / 1f64.max(ra.norm()).max(rb.norm()));
    }
    Ok(worst)
}

fn constant(u: Complex64) -> Affine {
    Affine::constant(u)
}

/// `T(u) = Σ_α θ(u + Σ_{β≠α} z_β) Π_{β≠α} θ(u − z_β) / (Π_{β≠α} θ(z_α − z_β) · θ(Σ z)) · f_α`
/// in `V_n`.
pub fn build_t(u: Complex64, n: usize, ctx: &ThetaContext) -> Result<ShiftOp> {
    if n < 2 {
        return Err(Error::InvalidParameter("T(u) needs n ≥ 2".into()));
    }
    let alg = make_vn(n, ctx)?;
    build_t_in(&alg, u)
}

fn build_t_in(alg: &Arc<ShiftAlgebra>, u: Complex64) -> Result<ShiftOp> {
    let n = alg.vars();
    let total = MeroExpr::theta1(Affine::sum_of(0..n));
    let terms = (0..n).map(|a| {
        let others = || (0..n).filter(move |&b| b != a);
        let mut factors = vec![MeroExpr::theta1(constant(u) + Affine::sum_of(others()))];
        factors.extend(others().map(|b| MeroExpr::theta1(constant(u) - Affine::var(b))));
        let den = MeroExpr::product(
            others()
                .map(|b| MeroExpr::theta1(Affine::var(a) - Affine::var(b)))
                .chain([total.clone()]),
        );
        (alg.unit(a), MeroExpr::product(factors) / den)
    });
    ShiftOp::from_terms(alg, terms.collect::<Vec<_>>())
}

/// `D₀⁻¹ Σ_j (−1)^j θ_j(u) D_j` from Cartier–Foata minors of the grid with
/// rows `[θ_0(z_i) … θ_{n−1}(z_i), f_i]`; `D_j` deletes column `j` and
/// `D₀` (the theta determinant) deletes the generator column.
pub fn build_t_determinant(u: Complex64, n: usize, ctx: &ThetaContext, seed: u64) -> Result<ShiftOp> {
    if n < 2 {
        return Err(Error::InvalidParameter("T(u) needs n ≥ 2".into()));
    }
    let alg = make_vn(n, ctx)?;
    let backend = ShiftBackend::new(&alg, seed);
    let rows = (0..n)
        .map(|i| {
            let mut row: Vec<ShiftOp> = (0..n)
                .map(|j| ShiftOp::function(&alg, MeroExpr::theta_basis(j, n, Affine::var(i))))
                .collect();
            row.push(ShiftOp::generator(&alg, i)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = CFMatrix::new(rows)?;
    let ms = minors(&backend, &grid)?;
    let d0_inv = ms[n].invert_function()?;
    let mut acc = ShiftOp::zero(&alg);
    for (j, mj) in ms.iter().take(n).enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let c = theta_basis(j, n, u, ctx)? * sign;
        acc = acc.add(&mj.scale(c))?;
    }
    crate::shift::shift_mul(&d0_inv, &acc)
}

/// Compares [`build_t`] with [`build_t_determinant`] after dividing out the
/// global constant between them, estimated from the first term at the first
/// usable point. Returns `(residual, constant)`.
pub fn determinant_consistency(u: Complex64, n: usize, ctx: &ThetaContext, seed: u64) -> Result<(f64, Complex64)> {
    let explicit = build_t(u, n, ctx)?;
    let det_form = build_t_determinant(u, n, ctx, seed)?;
    let key = explicit.algebra().unit(0);
    let a = explicit.coeff(&key).ok_or(Error::InvalidParameter("missing term".into()))?;
    let b = det_form.coeff(&key).ok_or(Error::InvalidParameter("missing term".into()))?;
    let guards = [a.clone(), b.clone()];
    let p = &sample_points(1, n, &guards, seed, ctx)?[0];
    let constant = b.eval(p, ctx)? / a.eval(p, ctx)?;
    let residual = op_equal(&explicit.scale(constant), &det_form, DEFAULT_SAMPLES, seed)?;
    Ok((residual, constant))
}

/// A one-parameter family of operators in a fixed algebra.
#[derive(Clone)]
pub struct TransferFamily {
    algebra: Arc<ShiftAlgebra>,
    label: String,
    builder: Arc<dyn Fn(Complex64) -> Result<ShiftOp> + Send + Sync>,
}

impl fmt::Debug for TransferFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransferFamily").field("label", &self.label).finish()
    }
}

impl TransferFamily {
    pub fn new<F>(algebra: Arc<ShiftAlgebra>, label: impl Into<String>, builder: F) -> Self
    where
        F: Fn(Complex64) -> Result<ShiftOp> + Send + Sync + 'static,
    {
        TransferFamily {
            algebra,
            label: label.into(),
            builder: Arc::new(builder),
        }
    }

    /// `T(u)` in `V_n`.
    pub fn vn(n: usize, ctx: &ThetaContext) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("T(u) needs n ≥ 2".into()));
        }
        let alg = make_vn(n, ctx)?;
        let inner = alg.clone();
        Ok(Self::new(alg, format!("V_{n}"), move |u| build_t_in(&inner, u)))
    }

    /// `T̃(u)` in `B̃` for layer sizes `p_list`.
    pub fn btilde(p_list: &[usize], ctx: &ThetaContext) -> Result<Self> {
        let alg = make_btilde(p_list, ctx)?;
        let layout = BtildeLayout::new(p_list)?;
        let inner = alg.clone();
        Ok(Self::new(alg, format!("B~{p_list:?}"), move |u| {
            build_t_tilde_in(&inner, &layout, u)
        }))
    }

    /// `T_aux(u)` in the SOS algebra.
    pub fn sos(n: usize, ctx: &ThetaContext) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("SOS transfer needs n ≥ 2".into()));
        }
        let alg = make_sos(n, ctx)?;
        let inner = alg.clone();
        Ok(Self::new(alg, format!("SOS_{n}"), move |u| build_sos_taux_in(&inner, u)))
    }

    pub fn algebra(&self) -> &Arc<ShiftAlgebra> {
        &self.algebra
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn build(&self, u: Complex64) -> Result<ShiftOp> {
        (self.builder)(u)
    }
}

/// Sampled residual of `[T(u), T(v)] = 0`; exactly zero for `u = v`.
pub fn transfer_commutator_residual(family: &TransferFamily, u: Complex64, v: Complex64, seed: u64) -> Result<f64> {
    if u == v {
        return Ok(0.0);
    }
    let tu = family.build(u)?;
    let tv = family.build(v)?;
    commutator_residual(&tu, &tv, DEFAULT_SAMPLES, seed)
}

/// `T̃(u)` for layer sizes `p₁ … p_{n−1}`.
pub fn build_t_tilde(u: Complex64, p_list: &[usize], ctx: &ThetaContext) -> Result<ShiftOp> {
    let alg = make_btilde(p_list, ctx)?;
    let layout = BtildeLayout::new(p_list)?;
    build_t_tilde_in(&alg, &layout, u)
}

fn build_t_tilde_in(alg: &Arc<ShiftAlgebra>, layout: &BtildeLayout, u: Complex64) -> Result<ShiftOp> {
    let layers = layout.layers();
    let mut choice = vec![0usize; layers];
    let mut terms = Vec::new();
    loop {
        let z = |g: usize| Affine::var(layout.z(choice[g], g));
        let mut num = vec![MeroExpr::theta1(constant(u) - z(0))];
        for g in 1..layers {
            num.push(MeroExpr::theta1(constant(u) + z(g - 1) - z(g)));
        }
        num.push(MeroExpr::theta1(constant(u) + z(layers - 1)));
        for g in 0..layers - 1 {
            num.push(MeroExpr::theta1(z(g) + z(g + 1) - Affine::var(layout.t(g))));
        }
        let mut den = Vec::new();
        for (g, &chosen) in choice.iter().enumerate() {
            for b in (0..layout.layer_size(g)).filter(|&b| b != chosen) {
                den.push(MeroExpr::theta1(z(g) - Affine::var(layout.z(b, g))));
            }
        }
        let mut m = alg.zero_index();
        for (g, &chosen) in choice.iter().enumerate() {
            m[layout.e(chosen, g)] = 1;
        }
        for g in 0..layers - 1 {
            m[layout.f(g)] = 1;
        }
        terms.push((m, MeroExpr::product(num) / MeroExpr::product(den)));

        // odometer over (α₁ … α_{n−1})
        let mut g = 0;
        loop {
            if g == layers {
                return ShiftOp::from_terms(alg, terms);
            }
            choice[g] += 1;
            if choice[g] < layout.layer_size(g) {
                break;
            }
            choice[g] = 0;
            g += 1;
        }
    }
}

/// Kernel of the `α`-th SOS term with `θ̃` factors and `λ = Σ z`:
/// `θ̃(u + z_α − λ)/θ̃(λ) · Π_{β≠α} θ̃(u + z_β)/θ̃(z_β − z_α)`.
fn sos_kernel(n: usize, alpha: usize, u: Complex64) -> MeroExpr {
    let lambda = Affine::sum_of(0..n);
    let mut num = vec![MeroExpr::theta_odd(constant(u) + Affine::var(alpha) - lambda.clone())];
    let mut den = vec![MeroExpr::theta_odd(lambda)];
    for b in (0..n).filter(|&b| b != alpha) {
        num.push(MeroExpr::theta_odd(constant(u) + Affine::var(b)));
        den.push(MeroExpr::theta_odd(Affine::var(b) - Affine::var(alpha)));
    }
    MeroExpr::product(num) / MeroExpr::product(den)
}

/// `T_aux(u) = Σ_α kernel_α · (θ̃(z_α + η) T⁻_α + θ̃(z_α − η) T⁺_α)`.
pub fn build_sos_taux(u: Complex64, n: usize, ctx: &ThetaContext) -> Result<ShiftOp> {
    if n < 2 {
        return Err(Error::InvalidParameter("SOS transfer needs n ≥ 2".into()));
    }
    build_sos_taux_in(&make_sos(n, ctx)?, u)
}

fn build_sos_taux_in(alg: &Arc<ShiftAlgebra>, u: Complex64) -> Result<ShiftOp> {
    let n = alg.vars();
    let eta = alg.ctx().eta();
    let mut terms = Vec::with_capacity(2 * n);
    for a in 0..n {
        let k = sos_kernel(n, a, u);
        let plus = MeroExpr::theta_odd(Affine::var(a) - eta);
        let minus = MeroExpr::theta_odd(Affine::var(a) + eta);
        terms.push((alg.unit(sos_gen(n, a, true)), k.clone() * plus));
        terms.push((alg.unit(sos_gen(n, a, false)), k * minus));
    }
    ShiftOp::from_terms(alg, terms)
}

/// Split `T_aux = T₊ + T₋` by shift direction.
pub fn sos_split(taux: &ShiftOp) -> Result<(ShiftOp, ShiftOp)> {
    let alg = taux.algebra();
    let n = alg.vars();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (m, f) in taux.terms() {
        let is_plus = (0..n).any(|a| m[sos_gen(n, a, true)] > 0);
        let is_minus = (0..n).any(|a| m[sos_gen(n, a, false)] > 0);
        match (is_plus, is_minus) {
            (true, false) => plus.push((m.clone(), f.clone())),
            (false, true) => minus.push((m.clone(), f.clone())),
            _ => return Err(Error::InvalidParameter("term mixes shift directions".into())),
        }
    }
    Ok((ShiftOp::from_terms(alg, plus)?, ShiftOp::from_terms(alg, minus)?))
}

/// Outcome of the SOS/`T(u)` coefficient comparison.
#[derive(Clone, Copy, Debug)]
pub struct SosRatio {
    /// `max |ratio/reference − 1|` over terms and points.
    pub spread: f64,
    /// Ratio at the first term and first point.
    pub reference: Complex64,
}

/// Divides the `α`-th `T₊` coefficient of `T_aux(−u)` by the `α`-th
/// coefficient of `T(u)` (built in `V_n` with deformation `2η/n`, so both
/// shift by `2η` in magnitude) times the gauge `e^{πinz_α} θ̃(z_α − η)`.
/// The identification holds when the ratio is one constant.
pub fn sos_vs_t_coefficient_ratio(u: Complex64, n: usize, points: usize, seed: u64, ctx: &ThetaContext) -> Result<SosRatio> {
    if n < 2 || points == 0 {
        return Err(Error::InvalidParameter("need n ≥ 2 and at least one point".into()));
    }
    let (plus, _) = sos_split(&build_sos_taux(-u, n, ctx)?)?;
    let vn_ctx = ctx.with_eta(ctx.eta() * (2.0 / n as f64));
    let t = build_t(u, n, &vn_ctx)?;
    let eta = ctx.eta();
    let ratios: Vec<MeroExpr> = (0..n)
        .map(|a| {
            let num = plus
                .coeff(&plus.algebra().unit(sos_gen(n, a, true)))
                .cloned()
                .unwrap_or_else(MeroExpr::zero);
            let den = t.coeff(&t.algebra().unit(a)).cloned().unwrap_or_else(MeroExpr::zero);
            let gauge = MeroExpr::exp2pi(Affine::var(a) * Complex64::new(n as f64 / 2.0, 0.0))
                * MeroExpr::theta_odd(Affine::var(a) - eta);
            num / (den * gauge)
        })
        .collect();
    let mut guards = vec![
        MeroExpr::theta1(Affine::sum_of(0..n)),
        MeroExpr::theta_odd(Affine::sum_of(0..n)),
    ];
    for a in 0..n {
        guards.push(MeroExpr::theta_odd(Affine::var(a) - eta));
        for b in a + 1..n {
            guards.push(MeroExpr::theta1(Affine::var(a) - Affine::var(b)));
        }
    }
    let pts = sample_points(points, n, &guards, seed, ctx)?;
    let reference = ratios[0].eval(&pts[0], ctx)?;
    let mut spread = 0.0f64;
    for p in &pts {
        for r in &ratios {
            spread = spread.max((r.eval(p, ctx)? / reference - 1.0).norm());
        }
    }
    Ok(SosRatio { spread, reference })
}

/// Expected constant `−e^{−πinu}` of [`sos_vs_t_coefficient_ratio`].
pub fn sos_expected_reference(u: Complex64, n: usize) -> Complex64 {
    -(Complex64::new(0.0, -PI * n as f64) * u).exp()
}
