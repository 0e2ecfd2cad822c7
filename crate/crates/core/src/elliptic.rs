//! Symmetric theta functions, the elliptic star product, bosonization into
//! shift algebras, Casimirs and the bosonized `f(u)` family.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::context::ThetaContext;
use crate::error::{Error, Result};
use crate::expr::{Affine, MeroExpr};
use crate::sample::sample_points;
use crate::shift::{
    commutator_residual, make_bpn, op_zero_residual, shift_mul, ShiftAlgebra, ShiftOp,
};
use crate::theta::theta_basis;
use crate::transfer::{TransferFamily, DEFAULT_SAMPLES};

/// Smallest singular-value gap accepted as a rank decision.
pub const MIN_RANK_GAP: f64 = 1e3;

fn cplx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A symmetric function of `degree` variables `z_0 … z_{degree−1}` that is
/// an order-`n` theta function in each.
#[derive(Clone, Debug)]
pub struct SymThetaFun {
    degree: usize,
    order: usize,
    body: MeroExpr,
    ctx: ThetaContext,
}

impl SymThetaFun {
    pub fn new(degree: usize, order: usize, body: MeroExpr, ctx: &ThetaContext) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("order must be positive".into()));
        }
        if let Some(&v) = body.free_vars().iter().next_back() {
            if v >= degree {
                return Err(Error::UnboundVariable(v));
            }
        }
        Ok(SymThetaFun {
            degree,
            order,
            body,
            ctx: ctx.clone(),
        })
    }

    /// `Σ coeffs[i] θ_i(z_0)` with `n = coeffs.len()`.
    pub fn degree_one(coeffs: &[Complex64], ctx: &ThetaContext) -> Result<Self> {
        Self::new(1, coeffs.len(), MeroExpr::theta_combination(coeffs, Affine::var(0)), ctx)
    }

    /// The basis function `θ_i` of order `n`.
    pub fn basis(i: usize, n: usize, ctx: &ThetaContext) -> Result<Self> {
        if i >= n {
            return Err(Error::InvalidParameter(format!("basis index {i} out of range for order {n}")));
        }
        let mut c = vec![cplx(0.0); n];
        c[i] = cplx(1.0);
        Self::degree_one(&c, ctx)
    }

    pub fn zero(degree: usize, order: usize, ctx: &ThetaContext) -> Self {
        SymThetaFun {
            degree,
            order,
            body: MeroExpr::zero(),
            ctx: ctx.clone(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn body(&self) -> &MeroExpr {
        &self.body
    }

    pub fn ctx(&self) -> &ThetaContext {
        &self.ctx
    }

    /// Same function, different numeric context (e.g. another `η`).
    pub fn with_ctx(&self, ctx: &ThetaContext) -> Self {
        SymThetaFun {
            ctx: ctx.clone(),
            ..self.clone()
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        self.body.eval(z, &self.ctx)
    }

    fn guards(&self) -> Vec<MeroExpr> {
        pair_guards(self.degree)
    }

    /// Max over transpositions and sampled points of `|f(σz) − f(z)|/scale`.
    pub fn symmetry_residual(&self, samples: usize, seed: u64) -> Result<f64> {
        if self.degree < 2 {
            return Ok(0.0);
        }
        let pts = sample_points(samples, self.degree, &self.guards(), seed, &self.ctx)?;
        let mut worst = 0.0f64;
        for p in &pts {
            let base = self.eval(p)?;
            for i in 0..self.degree {
                for j in i + 1..self.degree {
                    let mut q = p.clone();
                    q.swap(i, j);
                    let v = self.eval(&q)?;
                    worst = worst.max((v - base).norm() / 1f64.max(v.norm()).max(base.norm()));
                }
            }
        }
        Ok(worst)
    }

    /// Max over variables and sampled points of the 1-periodicity and
    /// `τ`-quasi-periodicity defects.
    pub fn quasi_periodicity_residual(&self, samples: usize, seed: u64) -> Result<f64> {
        let pts = sample_points(samples, self.degree.max(1), &self.guards(), seed, &self.ctx)?;
        let n = self.order as f64;
        let sign = if self.order.is_multiple_of(2) { 1.0 } else { -1.0 };
        let tau = self.ctx.tau();
        let mut worst = 0.0f64;
        for p in &pts {
            let base = self.eval(p)?;
            for k in 0..self.degree {
                let mut q = p.clone();
                q[k] += 1.0;
                let v1 = self.eval(&q)?;
                worst = worst.max((v1 - base).norm() / 1f64.max(v1.norm()).max(base.norm()));
                let mut q = p.clone();
                q[k] += tau;
                let vt = self.eval(&q)?;
                let expected = base * sign * (Complex64::new(0.0, -std::f64::consts::TAU * n) * p[k]).exp();
                worst = worst.max((vt - expected).norm() / 1f64.max(vt.norm()).max(expected.norm()));
            }
        }
        Ok(worst)
    }
}

/// `θ(z_i − z_j)` for all `i < j`.
pub fn pair_guards(dim: usize) -> Vec<MeroExpr> {
    let mut g = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            g.push(MeroExpr::theta1(Affine::var(i) - Affine::var(j)));
        }
    }
    g
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// `f` with its variables placed at `slots`, each shifted by `offset`.
fn placed(f: &SymThetaFun, slots: &[usize], offset: Complex64) -> Result<MeroExpr> {
    let map: Vec<Affine> = slots.iter().map(|&s| Affine::var(s) + offset).collect();
    f.body.substitute(&map)
}

/// Elliptic star product as a sum over `(α,β)`-shuffles:
/// `Σ_A f(z_A + βη) g(z_B − αη) Π_{i∈A, j∈B} θ(z_i − z_j − nη)/θ(z_i − z_j)`.
pub fn star(f: &SymThetaFun, g: &SymThetaFun) -> Result<SymThetaFun> {
    if f.order != g.order {
        return Err(Error::InvalidParameter("star product needs equal orders".into()));
    }
    let ctx = &f.ctx;
    let (al, be, n) = (f.degree, g.degree, f.order);
    let total = al + be;
    if f.body.is_zero() || g.body.is_zero() {
        return Ok(SymThetaFun::zero(total, n, ctx));
    }
    let eta = ctx.eta();
    let n_eta = eta * n as f64;
    let mut terms = Vec::new();
    for a_set in combinations(total, al) {
        let b_set: Vec<usize> = (0..total).filter(|i| !a_set.contains(i)).collect();
        let mut factors = vec![placed(f, &a_set, eta * be as f64)?, placed(g, &b_set, -eta * al as f64)?];
        for &i in &a_set {
            for &j in &b_set {
                let d = Affine::var(i) - Affine::var(j);
                factors.push(MeroExpr::theta1(d.clone() - n_eta) / MeroExpr::theta1(d));
            }
        }
        terms.push(MeroExpr::product(factors));
    }
    SymThetaFun::new(total, n, MeroExpr::sum(terms), ctx)
}

/// Largest mismatch of two functions of `dim` variables at guarded points.
fn compare(a: &SymThetaFun, b: &SymThetaFun, samples: usize, seed: u64) -> Result<f64> {
    let dim = a.degree.max(b.degree).max(1);
    let pts = sample_points(samples, dim, &pair_guards(dim), seed, &a.ctx)?;
    let mut worst = 0.0f64;
    for p in &pts {
        let x = a.eval(p)?;
        let y = b.eval(p)?;
        worst = worst.max((x - y).norm() / 1f64.max(x.norm()).max(y.norm()));
    }
    Ok(worst)
}

/// `|(f*g)*h − f*(g*h)|` relative, at `samples` points.
pub fn star_assoc_residual(f: &SymThetaFun, g: &SymThetaFun, h: &SymThetaFun, samples: usize, seed: u64) -> Result<f64> {
    let left = star(&star(f, g)?, h)?;
    let right = star(f, &star(g, h)?)?;
    compare(&left, &right, samples, seed)
}

/// `max |f*g − g*f|` at sampled points for each `η`-scaling `t`.
pub fn star_commutator_sizes(f: &SymThetaFun, g: &SymThetaFun, scales: &[f64], samples: usize, seed: u64) -> Result<Vec<f64>> {
    let pts = sample_points(samples, f.degree + g.degree, &pair_guards(f.degree + g.degree), seed, &f.ctx)?;
    scales
        .iter()
        .map(|&t| {
            let ctx = f.ctx.with_eta(f.ctx.eta() * t);
            let ft = f.with_ctx(&ctx);
            let gt = g.with_ctx(&ctx);
            let fg = star(&ft, &gt)?;
            let gf = star(&gt, &ft)?;
            let mut worst = 0.0f64;
            for p in &pts {
                worst = worst.max((fg.eval(p)? - gf.eval(p)?).norm());
            }
            Ok(worst)
        })
        .collect()
}

/// `φ_p(f) = Σ_α f(u_α)/Π_{i≠α} θ(u_α − u_i) · e_α` in `B_{p,n}`.
pub fn phi_p(f: &SymThetaFun, p: usize) -> Result<ShiftOp> {
    if f.degree != 1 {
        return Err(Error::InvalidParameter("bosonization is defined on degree one".into()));
    }
    let alg = make_bpn(p, f.order, &f.ctx)?;
    phi_p_in(&alg, f)
}

fn phi_p_in(alg: &Arc<ShiftAlgebra>, f: &SymThetaFun) -> Result<ShiftOp> {
    let p = alg.vars();
    let terms = (0..p)
        .map(|a| {
            let num = placed(f, &[a], cplx(0.0))?;
            let den = MeroExpr::product(
                (0..p)
                    .filter(|&i| i != a)
                    .map(|i| MeroExpr::theta1(Affine::var(a) - Affine::var(i))),
            );
            Ok((alg.unit(a), num / den))
        })
        .collect::<Result<Vec<_>>>()?;
    ShiftOp::from_terms(alg, terms)
}

/// Result of the bosonization well-definedness check.
#[derive(Clone, Debug)]
pub struct HomReport {
    /// Numerical rank of the span of `θ_i * θ_j`.
    pub rank: usize,
    /// `n(n+1)/2`.
    pub expected_rank: usize,
    /// `σ_{rank−1}/σ_rank`.
    pub gap: f64,
    /// Largest zero-residual of `Σ c_ij φ(θ_i)φ(θ_j)` over kernel vectors `c`.
    pub residual: f64,
    /// `σ_0/σ_{rank−1}`, the conditioning of the retained block.
    pub kappa: f64,
}

/// Numerical rank of a descending singular-value list: the cut with the
/// largest consecutive ratio, values being floored at `σ_0·ε` so that
/// round-off noise never produces a gap. Errors when that ratio is below
/// [`MIN_RANK_GAP`].
pub fn numerical_rank(singular: &[f64]) -> Result<(usize, f64)> {
    let floor = singular.first().copied().unwrap_or(0.0) * f64::EPSILON;
    let mut best = (singular.len(), 0.0f64);
    for k in 1..singular.len() {
        let ratio = singular[k - 1].max(floor) / singular[k].max(floor);
        if ratio > best.1 {
            best = (k, ratio);
        }
    }
    if best.1 < MIN_RANK_GAP {
        return Err(Error::RankAmbiguous { gap: best.1 });
    }
    Ok(best)
}

/// Samples `θ_i * θ_j` at `n² + 10` points, finds the rank by SVD and
/// checks that the bosonized products annihilate every kernel vector.
pub fn hom_welldefined_residual(n: usize, p: usize, ctx: &ThetaContext, seed: u64) -> Result<HomReport> {
    if n < 2 || p < 1 {
        return Err(Error::InvalidParameter("need n ≥ 2 and p ≥ 1".into()));
    }
    let basis: Vec<SymThetaFun> = (0..n).map(|i| SymThetaFun::basis(i, n, ctx)).collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let products: Vec<SymThetaFun> = pairs
        .iter()
        .map(|&(i, j)| star(&basis[i], &basis[j]))
        .collect::<Result<_>>()?;
    let pts = sample_points(n * n + 10, 2, &pair_guards(2), seed, ctx)?;
    let mut m = DMatrix::from_element(pairs.len(), pts.len(), cplx(0.0));
    for (r, f) in products.iter().enumerate() {
        for (c, pt) in pts.iter().enumerate() {
            m[(r, c)] = f.eval(pt)?;
        }
    }
    let svd = m.svd(true, false);
    let mut sv: Vec<(f64, usize)> = svd.singular_values.iter().copied().zip(0..).collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let values: Vec<f64> = sv.iter().map(|x| x.0).collect();
    let (rank, gap) = numerical_rank(&values)?;
    let u = svd.u.as_ref().expect("left singular vectors requested");

    let alg = make_bpn(p, n, ctx)?;
    let phis: Vec<ShiftOp> = basis.iter().map(|f| phi_p_in(&alg, f)).collect::<Result<_>>()?;
    let prods: Vec<ShiftOp> = pairs
        .iter()
        .map(|&(i, j)| shift_mul(&phis[i], &phis[j]))
        .collect::<Result<_>>()?;
    let mut residual = 0.0f64;
    for &(_, col) in &sv[rank..] {
        let mut acc = ShiftOp::zero(&alg);
        for (r, op) in prods.iter().enumerate() {
            acc = acc.add(&op.scale(u[(r, col)].conj()))?;
        }
        residual = residual.max(op_zero_residual(&acc, DEFAULT_SAMPLES, seed)?);
    }
    Ok(HomReport {
        rank,
        expected_rank: n * (n + 1) / 2,
        gap,
        residual,
        kappa: values[0] / values[rank - 1],
    })
}

/// Factor order inside each term of the quadratic relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QnkOrder {
    /// `φ(θ_{j−r}) φ(θ_{i+r})`
    AsPrinted,
    /// `φ(θ_{i+r}) φ(θ_{j−r})`
    Reversed,
}

/// Zero-residual of `Σ_r θ_{j−i}(0)/(θ_{j−i−r}(−η) θ_r(η)) · φ_p(x_a) φ_p(x_b)`
/// in `B_{p,n}`. Indices are taken mod `n`.
pub fn qnk_relation_residual(n: usize, i: usize, j: usize, p: usize, order: QnkOrder, ctx: &ThetaContext, seed: u64) -> Result<f64> {
    if n < 2 || p < 1 {
        return Err(Error::InvalidParameter("need n ≥ 2 and p ≥ 1".into()));
    }
    let eta = ctx.eta();
    let md = |x: isize| x.rem_euclid(n as isize) as usize;
    let (i, j) = (i as isize, j as isize);
    let alg = make_bpn(p, n, ctx)?;
    let phis: Vec<ShiftOp> = (0..n)
        .map(|k| phi_p_in(&alg, &SymThetaFun::basis(k, n, ctx)?))
        .collect::<Result<_>>()?;
    let top = theta_basis(md(j - i), n, cplx(0.0), ctx)?;
    let mut acc = ShiftOp::zero(&alg);
    for r in 0..n as isize {
        let den = theta_basis(md(j - i - r), n, -eta, ctx)? * theta_basis(md(r), n, eta, ctx)?;
        if den.norm() < ctx.pole_guard() {
            return Err(Error::Pole { magnitude: den.norm() });
        }
        let coeff = top / den;
        if coeff == cplx(0.0) {
            continue;
        }
        let (x, y) = (md(j - r), md(i + r));
        let term = match order {
            QnkOrder::AsPrinted => shift_mul(&phis[x], &phis[y])?,
            QnkOrder::Reversed => shift_mul(&phis[y], &phis[x])?,
        };
        acc = acc.add(&term.scale(coeff))?;
    }
    if acc.is_empty() {
        return Ok(0.0);
    }
    op_zero_residual(&acc, DEFAULT_SAMPLES, seed)
}

/// `C_α = θ_α(Σz − (m−1)τ/2) · Π_{i≠j} θ(z_i − z_j − 2mη)` with `θ_α` of
/// order 2, a symmetric theta function of degree `m` and order `2m`.
pub fn casimir(alpha: usize, m: usize, ctx: &ThetaContext) -> Result<SymThetaFun> {
    if alpha > 1 || m < 2 {
        return Err(Error::InvalidParameter("need α ∈ {0,1} and m ≥ 2".into()));
    }
    let shift = ctx.tau() * ((m as f64 - 1.0) / 2.0);
    let mut factors = vec![MeroExpr::theta_basis(alpha, 2, Affine::sum_of(0..m) - shift)];
    let two_m_eta = ctx.eta() * (2 * m) as f64;
    for i in 0..m {
        for j in (0..m).filter(|&j| j != i) {
            factors.push(MeroExpr::theta1(Affine::var(i) - Affine::var(j) - two_m_eta));
        }
    }
    SymThetaFun::new(m, 2 * m, MeroExpr::product(factors), ctx)
}

/// `max |C_α(z₁, z₁ + 2mη, z₃, …)|`, relative to `max(1, |C_α(z)|)` at
/// the unconstrained point.
pub fn casimir_diagonal_residual(alpha: usize, m: usize, samples: usize, seed: u64, ctx: &ThetaContext) -> Result<f64> {
    let c = casimir(alpha, m, ctx)?;
    let pts = sample_points(samples, m, &pair_guards(m), seed, ctx)?;
    let two_m_eta = ctx.eta() * (2 * m) as f64;
    let mut worst = 0.0f64;
    for p in &pts {
        let mut q = p.clone();
        q[1] = q[0] + two_m_eta;
        worst = worst.max(c.eval(&q)?.norm() / 1f64.max(c.eval(p)?.norm()));
    }
    Ok(worst)
}

/// Bosonized `f(u)` in `B_{m−1,2m}`:
/// `Σ_α θ(u + Σ_{β≠α} z_β) Π_{β≠α} θ(u − z_β)/θ(z_β − z_α) · Ψ(z_α + 4m²η − (a + (m−2)b + 2m(m−2)η)/(m+5))
/// · θ(Σ z + a) Π_{β≠α} θ(z_α + z_β + b) · e^{2πi(2(m−2)z_α + Σ_{β≠α} z_β)} · e_α e_1 … e_{m−1}`
/// with `Ψ = θ_{psi_index}` of order `m + 5`.
pub fn build_fu_bosonized(u: Complex64, m: usize, a: Complex64, b: Complex64, psi_index: usize, ctx: &ThetaContext) -> Result<ShiftOp> {
    if m < 2 {
        return Err(Error::InvalidParameter("need m ≥ 2".into()));
    }
    let alg = make_bpn(m - 1, 2 * m, ctx)?;
    build_fu_in(&alg, u, m, a, b, psi_index)
}

fn build_fu_in(alg: &Arc<ShiftAlgebra>, u: Complex64, m: usize, a: Complex64, b: Complex64, psi_index: usize) -> Result<ShiftOp> {
    let p = m - 1;
    let eta = alg.ctx().eta();
    let mf = m as f64;
    let psi_shift = eta * (4.0 * mf * mf) - (a + b * (mf - 2.0) + eta * (2.0 * mf * (mf - 2.0))) / (mf + 5.0);
    let uc = Affine::constant(u);
    let mut terms = Vec::with_capacity(p);
    for al in 0..p {
        let others: Vec<usize> = (0..p).filter(|&x| x != al).collect();
        let za = || Affine::var(al);
        let mut num = vec![
            MeroExpr::theta1(uc.clone() + Affine::sum_of(others.iter().copied())),
            MeroExpr::theta_basis(psi_index, m + 5, za() + psi_shift),
            MeroExpr::theta1(Affine::sum_of(0..p) + a),
            MeroExpr::exp2pi(za() * cplx(2.0 * (mf - 2.0)) + Affine::sum_of(others.iter().copied())),
        ];
        let mut den = Vec::with_capacity(others.len());
        for &x in &others {
            num.push(MeroExpr::theta1(uc.clone() - Affine::var(x)));
            num.push(MeroExpr::theta1(za() + Affine::var(x) + b));
            den.push(MeroExpr::theta1(Affine::var(x) - za()));
        }
        let mut key = vec![1u32; p];
        key[al] += 1;
        terms.push((key, MeroExpr::product(num) / MeroExpr::product(den)));
    }
    ShiftOp::from_terms(alg, terms)
}

/// The `f(u)` family for fixed `(m, a, b, Ψ)`.
pub fn fu_family(m: usize, a: Complex64, b: Complex64, psi_index: usize, ctx: &ThetaContext) -> Result<TransferFamily> {
    if m < 2 {
        return Err(Error::InvalidParameter("need m ≥ 2".into()));
    }
    let alg = make_bpn(m - 1, 2 * m, ctx)?;
    let inner = alg.clone();
    Ok(TransferFamily::new(alg, format!("f(u), m={m}"), move |u| {
        build_fu_in(&inner, u, m, a, b, psi_index)
    }))
}

/// Sampled `[f(u), f(v)] = 0` residual; exactly zero for `u = v`.
#[allow(clippy::too_many_arguments)]
pub fn fu_commutator_residual(
    u: Complex64,
    v: Complex64,
    m: usize,
    a: Complex64,
    b: Complex64,
    psi_index: usize,
    ctx: &ThetaContext,
    seed: u64,
) -> Result<f64> {
    if u == v {
        return Ok(0.0);
    }
    let fam = fu_family(m, a, b, psi_index, ctx)?;
    commutator_residual(&fam.build(u)?, &fam.build(v)?, DEFAULT_SAMPLES, seed)
}
