//! Difference-operator algebras: coefficient functions times monomials in
//! commuting shift generators.
//!
//! Generator `α` moves past a function by translating its variables:
//! `g_α·F(v) = F(v + S[α])·g_α`. Operators are kept in the normal form
//! coefficient-then-monomial.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::cf::{AlgebraBackend, Ring};
use crate::context::ThetaContext;
use crate::error::{Error, Result};
use crate::expr::{MeroExpr, VarId};
use crate::sample::{raw_draw, MAX_DRAWS_PER_POINT};

/// Exponent vector over the generators of an algebra.
pub type MultiIndex = Vec<u32>;

/// Points used by sampled zero-pruning.
pub const PRUNE_POINTS: usize = 5;

#[derive(Clone, Debug)]
pub struct ShiftAlgebra {
    var_names: Vec<String>,
    gen_names: Vec<String>,
    shift: Vec<Vec<Complex64>>,
    ctx: ThetaContext,
}

impl PartialEq for ShiftAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.var_names == other.var_names && self.gen_names == other.gen_names && self.shift == other.shift
    }
}

impl ShiftAlgebra {
    /// `shift[α][β]` is the translation generator `α` applies to variable `β`.
    pub fn new(
        var_names: Vec<String>,
        gen_names: Vec<String>,
        shift: Vec<Vec<Complex64>>,
        ctx: ThetaContext,
    ) -> Result<Arc<Self>> {
        if var_names.is_empty() || gen_names.is_empty() {
            return Err(Error::InvalidParameter("an algebra needs variables and generators".into()));
        }
        if shift.len() != gen_names.len() || shift.iter().any(|r| r.len() != var_names.len()) {
            return Err(Error::Shape(format!(
                "shift matrix must be {}×{}",
                gen_names.len(),
                var_names.len()
            )));
        }
        Ok(Arc::new(ShiftAlgebra {
            var_names,
            gen_names,
            shift,
            ctx,
        }))
    }

    pub fn vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn gens(&self) -> usize {
        self.gen_names.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn gen_names(&self) -> &[String] {
        &self.gen_names
    }

    pub fn shift_matrix(&self) -> &[Vec<Complex64>] {
        &self.shift
    }

    pub fn ctx(&self) -> &ThetaContext {
        &self.ctx
    }

    pub fn var_index(&self, name: &str) -> Option<VarId> {
        self.var_names.iter().position(|v| v == name)
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gen_names.iter().position(|g| g == name)
    }

    /// Translation applied by the monomial `g^m`: `Σ_α m_α S[α]`.
    pub fn translation(&self, m: &[u32]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.vars()];
        for (row, &e) in self.shift.iter().zip(m) {
            if e == 0 {
                continue;
            }
            for (o, s) in out.iter_mut().zip(row) {
                *o += s * e as f64;
            }
        }
        out
    }

    /// Unit multi-index of generator `α`.
    pub fn unit(&self, alpha: usize) -> MultiIndex {
        let mut m = vec![0; self.gens()];
        m[alpha] = 1;
        m
    }

    pub fn zero_index(&self) -> MultiIndex {
        vec![0; self.gens()]
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn diag_matrix(n: usize, diag: Complex64, off: Complex64) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|a| (0..n).map(|b| if a == b { diag } else { off }).collect())
        .collect()
}

/// `V_n`: generators `f_i` with `f_i z_i = (z_i − nη) f_i`.
pub fn make_vn(n: usize, ctx: &ThetaContext) -> Result<Arc<ShiftAlgebra>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let s = -ctx.eta() * n as f64;
    ShiftAlgebra::new(names("z", n), names("f", n), diag_matrix(n, s, Complex64::new(0.0, 0.0)), ctx.clone())
}

/// `B_{p,n}`: `e_α` shifts `u_α` by `(n−2)η` and every other `u_β` by `−2η`.
pub fn make_bpn(p: usize, n: usize, ctx: &ThetaContext) -> Result<Arc<ShiftAlgebra>> {
    if p == 0 || n == 0 {
        return Err(Error::InvalidParameter("p and n must be at least 1".into()));
    }
    let eta = ctx.eta();
    ShiftAlgebra::new(
        names("u", p),
        names("e", p),
        diag_matrix(p, eta * (n as f64 - 2.0), eta * -2.0),
        ctx.clone(),
    )
}

/// Index bookkeeping for the layered algebra `B̃` built from `p₁ … p_{n−1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BtildeLayout {
    p_list: Vec<usize>,
    offsets: Vec<usize>,
    z_count: usize,
}

impl BtildeLayout {
    pub fn new(p_list: &[usize]) -> Result<Self> {
        if p_list.is_empty() || p_list.contains(&0) {
            return Err(Error::InvalidParameter("layer sizes must be non-empty and positive".into()));
        }
        let mut offsets = Vec::with_capacity(p_list.len());
        let mut acc = 0;
        for &p in p_list {
            offsets.push(acc);
            acc += p;
        }
        Ok(BtildeLayout {
            p_list: p_list.to_vec(),
            offsets,
            z_count: acc,
        })
    }

    /// The `n` with `p_list.len() = n − 1`.
    pub fn n(&self) -> usize {
        self.p_list.len() + 1
    }

    pub fn layers(&self) -> usize {
        self.p_list.len()
    }

    pub fn layer_size(&self, gamma: usize) -> usize {
        self.p_list[gamma]
    }

    /// Variable `z_{β,γ}` (zero-based `β`, `γ`).
    pub fn z(&self, beta: usize, gamma: usize) -> VarId {
        self.offsets[gamma] + beta
    }

    /// Variable `t_{γ,γ+1}`, `γ < layers − 1`.
    pub fn t(&self, gamma: usize) -> VarId {
        self.z_count + gamma
    }

    /// Generator `e_{α,γ}`.
    pub fn e(&self, alpha: usize, gamma: usize) -> usize {
        self.offsets[gamma] + alpha
    }

    /// Generator `f_{γ,γ+1}`.
    pub fn f(&self, gamma: usize) -> usize {
        self.z_count + gamma
    }

    pub fn var_count(&self) -> usize {
        self.z_count + self.layers() - 1
    }
}

/// `B̃`: `e_{α,γ}` shifts `z_{β,γ}` by `−nη` for `β ≠ α` only;
/// `f_{γ,γ+1}` shifts `t_{γ,γ+1}` by `−nη`.
pub fn make_btilde(p_list: &[usize], ctx: &ThetaContext) -> Result<Arc<ShiftAlgebra>> {
    let layout = BtildeLayout::new(p_list)?;
    let s = -ctx.eta() * layout.n() as f64;
    let nv = layout.var_count();
    let mut var_names = Vec::with_capacity(nv);
    let mut gen_names = Vec::with_capacity(nv);
    for g in 0..layout.layers() {
        for b in 0..layout.layer_size(g) {
            var_names.push(format!("z{},{}", b + 1, g + 1));
            gen_names.push(format!("e{},{}", b + 1, g + 1));
        }
    }
    for g in 0..layout.layers() - 1 {
        var_names.push(format!("t{},{}", g + 1, g + 2));
        gen_names.push(format!("f{},{}", g + 1, g + 2));
    }
    let mut shift = vec![vec![Complex64::new(0.0, 0.0); nv]; nv];
    for g in 0..layout.layers() {
        for a in 0..layout.layer_size(g) {
            for b in 0..layout.layer_size(g) {
                if a != b {
                    shift[layout.e(a, g)][layout.z(b, g)] = s;
                }
            }
        }
    }
    for g in 0..layout.layers() - 1 {
        shift[layout.f(g)][layout.t(g)] = s;
    }
    ShiftAlgebra::new(var_names, gen_names, shift, ctx.clone())
}

/// SOS algebra: generators `T⁺_α` (index `α`) and `T⁻_α` (index `n+α`)
/// shifting `z_α` by `+2η` and `−2η`.
pub fn make_sos(n: usize, ctx: &ThetaContext) -> Result<Arc<ShiftAlgebra>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let two_eta = ctx.eta() * 2.0;
    let mut shift = vec![vec![Complex64::new(0.0, 0.0); n]; 2 * n];
    for a in 0..n {
        shift[a][a] = two_eta;
        shift[n + a][a] = -two_eta;
    }
    let gens = names("T+", n).into_iter().chain(names("T-", n)).collect();
    ShiftAlgebra::new(names("z", n), gens, shift, ctx.clone())
}

/// Generator index of `T^±_α` in [`make_sos`].
pub fn sos_gen(n: usize, alpha: usize, plus: bool) -> usize {
    if plus {
        alpha
    } else {
        n + alpha
    }
}

/// `Σ_m F_m(v)·g^m` with a finite set of multi-indices.
#[derive(Clone, Debug)]
pub struct ShiftOp {
    algebra: Arc<ShiftAlgebra>,
    terms: BTreeMap<MultiIndex, MeroExpr>,
}

impl ShiftOp {
    pub fn zero(algebra: &Arc<ShiftAlgebra>) -> Self {
        ShiftOp {
            algebra: algebra.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// The multiplication operator by `f`.
    pub fn function(algebra: &Arc<ShiftAlgebra>, f: MeroExpr) -> Self {
        Self::monomial(algebra, algebra.zero_index(), f).expect("zero index has the right length")
    }

    pub fn one(algebra: &Arc<ShiftAlgebra>) -> Self {
        Self::function(algebra, MeroExpr::one())
    }

    /// `coeff · g^m`.
    pub fn monomial(algebra: &Arc<ShiftAlgebra>, m: MultiIndex, coeff: MeroExpr) -> Result<Self> {
        if m.len() != algebra.gens() {
            return Err(Error::Shape(format!("multi-index must have {} entries", algebra.gens())));
        }
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(m, coeff);
        }
        Ok(ShiftOp {
            algebra: algebra.clone(),
            terms,
        })
    }

    /// The bare generator `g_α`.
    pub fn generator(algebra: &Arc<ShiftAlgebra>, alpha: usize) -> Result<Self> {
        if alpha >= algebra.gens() {
            return Err(Error::InvalidParameter(format!("generator {alpha} out of range")));
        }
        Self::monomial(algebra, algebra.unit(alpha), MeroExpr::one())
    }

    pub fn from_terms<I>(algebra: &Arc<ShiftAlgebra>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, MeroExpr)>,
    {
        let mut acc = ShiftOp::zero(algebra);
        for (m, f) in terms {
            acc = acc.add(&ShiftOp::monomial(algebra, m, f)?)?;
        }
        Ok(acc)
    }

    pub fn algebra(&self) -> &Arc<ShiftAlgebra> {
        &self.algebra
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, MeroExpr> {
        &self.terms
    }

    pub fn coeff(&self, m: &[u32]) -> Option<&MeroExpr> {
        self.terms.get(m)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degrees of the monomials present.
    pub fn degrees(&self) -> Vec<u32> {
        self.terms.keys().map(|m| m.iter().sum()).collect()
    }

    pub fn is_homogeneous(&self) -> bool {
        let d = self.degrees();
        d.windows(2).all(|w| w[0] == w[1])
    }

    fn same_algebra(&self, other: &ShiftOp) -> Result<()> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) || *self.algebra == *other.algebra {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    fn merged(algebra: &Arc<ShiftAlgebra>, mut buckets: BTreeMap<MultiIndex, Vec<MeroExpr>>) -> Self {
        let terms = std::mem::take(&mut buckets)
            .into_iter()
            .filter_map(|(m, fs)| {
                let s = MeroExpr::sum(fs);
                (!s.is_zero()).then_some((m, s))
            })
            .collect();
        ShiftOp {
            algebra: algebra.clone(),
            terms,
        }
    }

    pub fn add(&self, other: &ShiftOp) -> Result<ShiftOp> {
        self.same_algebra(other)?;
        let mut buckets: BTreeMap<MultiIndex, Vec<MeroExpr>> = BTreeMap::new();
        for (m, f) in self.terms.iter().chain(other.terms.iter()) {
            buckets.entry(m.clone()).or_default().push(f.clone());
        }
        Ok(Self::merged(&self.algebra, buckets))
    }

    pub fn sub(&self, other: &ShiftOp) -> Result<ShiftOp> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ShiftOp {
        self.map_coeffs(|f| -f.clone())
    }

    /// Multiply every coefficient by the function `f` on the left.
    pub fn left_mul_function(&self, f: &MeroExpr) -> ShiftOp {
        self.map_coeffs(|g| f.clone() * g.clone())
    }

    pub fn scale(&self, c: Complex64) -> ShiftOp {
        self.map_coeffs(|f| f.clone() * c)
    }

    fn map_coeffs<F: Fn(&MeroExpr) -> MeroExpr>(&self, f: F) -> ShiftOp {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), f(c)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        ShiftOp {
            algebra: self.algebra.clone(),
            terms,
        }
    }

    /// Drop terms whose coefficient stays below `eval_tol` at
    /// [`PRUNE_POINTS`] sampled points (points hitting poles are skipped;
    /// a term with no usable point is kept).
    pub fn pruned(&self, seed: u64) -> ShiftOp {
        let ctx = self.algebra.ctx();
        let points: Vec<Vec<Complex64>> = (0..PRUNE_POINTS as u64)
            .map(|k| raw_draw(seed, k, self.algebra.vars(), ctx))
            .collect();
        let terms = self
            .terms
            .iter()
            .filter(|(_, f)| {
                let mut usable = 0;
                for p in &points {
                    match f.eval(p, ctx) {
                        Ok(v) if v.norm() >= ctx.eval_tol() => return true,
                        Ok(_) => usable += 1,
                        Err(_) => {}
                    }
                }
                usable == 0
            })
            .map(|(m, f)| (m.clone(), f.clone()))
            .collect();
        ShiftOp {
            algebra: self.algebra.clone(),
            terms,
        }
    }

    /// Inverse of a multiplication operator (zero multi-index only).
    pub fn invert_function(&self) -> Result<ShiftOp> {
        let zero = self.algebra.zero_index();
        match (self.terms.len(), self.terms.get(&zero)) {
            (1, Some(f)) => Ok(ShiftOp::function(&self.algebra, f.recip())),
            _ => Err(Error::InvalidParameter(
                "only multiplication operators can be inverted".into(),
            )),
        }
    }

    /// Coefficient values and cancellation scales at one point.
    pub fn eval_at(&self, point: &[Complex64]) -> Result<BTreeMap<MultiIndex, (Complex64, f64)>> {
        let ctx = self.algebra.ctx();
        self.terms
            .iter()
            .map(|(m, f)| Ok((m.clone(), f.eval_with_scale(point, ctx)?)))
            .collect()
    }
}

fn mul_terms(algebra: &Arc<ShiftAlgebra>, a: &ShiftOp, b: &ShiftOp) -> ShiftOp {
    let mut buckets: BTreeMap<MultiIndex, Vec<MeroExpr>> = BTreeMap::new();
    for (m, f) in &a.terms {
        let shift = algebra.translation(m);
        for (k, g) in &b.terms {
            let key: MultiIndex = m.iter().zip(k).map(|(x, y)| x + y).collect();
            buckets.entry(key).or_default().push(f.clone() * g.translate(&shift));
        }
    }
    ShiftOp::merged(algebra, buckets)
}

/// `F g^m · G g^k = F·(G∘T_m) g^{m+k}`, extended bilinearly.
pub fn shift_mul(a: &ShiftOp, b: &ShiftOp) -> Result<ShiftOp> {
    a.same_algebra(b)?;
    Ok(mul_terms(&a.algebra, a, b))
}

pub fn shift_commutator(a: &ShiftOp, b: &ShiftOp) -> Result<ShiftOp> {
    shift_mul(a, b)?.sub(&shift_mul(b, a)?)
}

/// Max over sampled points and multi-indices of the coefficient mismatch
/// `|a_m − b_m| / max(1, scale)`, where the scale is the largest summand
/// on either side. Points where any coefficient hits a pole are redrawn.
pub fn op_equal(a: &ShiftOp, b: &ShiftOp, samples: usize, seed: u64) -> Result<f64> {
    a.same_algebra(b)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    let algebra = &a.algebra;
    let budget = MAX_DRAWS_PER_POINT * samples;
    let mut accepted = 0;
    let mut draws = 0;
    let mut worst = 0.0f64;
    while accepted < samples {
        if draws >= budget {
            return Err(Error::SamplingExhausted {
                draws,
                accepted,
                requested: samples,
            });
        }
        let point = raw_draw(seed, draws as u64, algebra.vars(), algebra.ctx());
        draws += 1;
        let (va, vb) = match (a.eval_at(&point), b.eval_at(&point)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(Error::UnboundVariable(v)), _) | (_, Err(Error::UnboundVariable(v))) => {
                return Err(Error::UnboundVariable(v))
            }
            _ => continue,
        };
        accepted += 1;
        let zero = (Complex64::new(0.0, 0.0), 0.0);
        for m in va.keys().chain(vb.keys()) {
            let (x, sx) = va.get(m).copied().unwrap_or(zero);
            let (y, sy) = vb.get(m).copied().unwrap_or(zero);
            let scale = 1.0f64.max(sx).max(sy);
            worst = worst.max((x - y).norm() / scale);
        }
    }
    Ok(worst)
}

/// `op_equal(a, 0)`.
pub fn op_zero_residual(a: &ShiftOp, samples: usize, seed: u64) -> Result<f64> {
    op_equal(a, &ShiftOp::zero(&a.algebra), samples, seed)
}

/// Residual of `[a, b] = 0`, comparing `ab` against `ba` so the scale
/// sees every product term.
pub fn commutator_residual(a: &ShiftOp, b: &ShiftOp, samples: usize, seed: u64) -> Result<f64> {
    op_equal(&shift_mul(a, b)?, &shift_mul(b, a)?, samples, seed)
}

/// Shift operators as a ring for Cartier–Foata determinants. Norms are
/// sampled at fixed seeded points.
#[derive(Clone, Debug)]
pub struct ShiftBackend {
    algebra: Arc<ShiftAlgebra>,
    points: Vec<Vec<Complex64>>,
}

impl ShiftBackend {
    pub fn new(algebra: &Arc<ShiftAlgebra>, seed: u64) -> Self {
        let points = (0..8)
            .map(|k| raw_draw(seed, k, algebra.vars(), algebra.ctx()))
            .collect();
        ShiftBackend {
            algebra: algebra.clone(),
            points,
        }
    }

    pub fn algebra(&self) -> &Arc<ShiftAlgebra> {
        &self.algebra
    }
}

impl Ring for ShiftBackend {
    type Elem = ShiftOp;
    fn zero(&self) -> ShiftOp {
        ShiftOp::zero(&self.algebra)
    }
    fn one(&self) -> ShiftOp {
        ShiftOp::one(&self.algebra)
    }
    fn add(&self, a: &ShiftOp, b: &ShiftOp) -> ShiftOp {
        a.add(b).expect("backend elements share one algebra")
    }
    fn mul(&self, a: &ShiftOp, b: &ShiftOp) -> ShiftOp {
        mul_terms(&self.algebra, a, b)
    }
    fn neg(&self, a: &ShiftOp) -> ShiftOp {
        a.neg()
    }
    fn scale(&self, c: Complex64, a: &ShiftOp) -> ShiftOp {
        a.scale(c)
    }
}

impl AlgebraBackend for ShiftBackend {
    fn invert(&self, a: &ShiftOp) -> Result<ShiftOp> {
        a.invert_function()
    }
    fn norm(&self, a: &ShiftOp) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.points {
            if let Ok(vals) = a.eval_at(p) {
                for (v, _) in vals.values() {
                    worst = worst.max(v.norm());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Affine;

    fn ctx() -> ThetaContext {
        ThetaContext::with_defaults(3)
    }

    #[test]
    fn vn_exchange_rule() {
        let ctx = ctx();
        let alg = make_vn(3, &ctx).unwrap();
        let f1 = ShiftOp::generator(&alg, 0).unwrap();
        let z1 = ShiftOp::function(&alg, MeroExpr::var(0));
        let prod = shift_mul(&f1, &z1).unwrap();
        assert_eq!(prod.len(), 1);
        let expected = ShiftOp::monomial(
            &alg,
            alg.unit(0),
            MeroExpr::affine(Affine::var(0) - ctx.eta() * 3.0),
        )
        .unwrap();
        assert!(op_equal(&prod, &expected, 5, 1).unwrap() < 1e-14);
    }

    #[test]
    fn vn_one_generator() {
        let ctx = ctx();
        let alg = make_vn(1, &ctx).unwrap();
        assert_eq!(alg.shift_matrix(), &[vec![-ctx.eta()]]);
    }

    #[test]
    fn bpn_shift_matrix() {
        let ctx = ctx();
        let alg = make_bpn(2, 4, &ctx).unwrap();
        let e = ctx.eta();
        assert_eq!(alg.shift_matrix(), &[vec![e * 2.0, e * -2.0], vec![e * -2.0, e * 2.0]]);
    }

    #[test]
    fn btilde_layout_and_own_variable() {
        let ctx = ctx();
        let alg = make_btilde(&[2, 2], &ctx).unwrap();
        assert_eq!(alg.vars(), 5);
        assert_eq!(alg.gens(), 5);
        let layout = BtildeLayout::new(&[2, 2]).unwrap();
        let s = alg.shift_matrix();
        let ne = -ctx.eta() * 3.0;
        assert_eq!(s[layout.e(0, 0)][layout.z(1, 0)], ne);
        assert_eq!(s[layout.e(0, 0)][layout.z(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(s[layout.e(0, 0)][layout.z(1, 1)], Complex64::new(0.0, 0.0));
        assert_eq!(s[layout.f(0)][layout.t(0)], ne);
        let e = ShiftOp::generator(&alg, layout.e(0, 0)).unwrap();
        let z = ShiftOp::function(&alg, MeroExpr::var(layout.z(0, 0)));
        assert_eq!(commutator_residual(&e, &z, 5, 2).unwrap(), 0.0);
    }

    #[test]
    fn identity_is_unit() {
        let ctx = ctx();
        let alg = make_vn(2, &ctx).unwrap();
        let a = ShiftOp::from_terms(
            &alg,
            [
                (vec![1, 0], MeroExpr::theta1(Affine::var(0) - Affine::var(1))),
                (vec![0, 2], MeroExpr::var(1)),
            ],
        )
        .unwrap();
        let one = ShiftOp::one(&alg);
        assert!(op_equal(&shift_mul(&one, &a).unwrap(), &a, 5, 3).unwrap() < 1e-15);
        assert!(op_equal(&shift_mul(&a, &one).unwrap(), &a, 5, 3).unwrap() < 1e-15);
    }

    #[test]
    fn commutators_vanish() {
        let ctx = ctx();
        let alg = make_vn(3, &ctx).unwrap();
        let z1 = ShiftOp::function(&alg, MeroExpr::var(0));
        let z2 = ShiftOp::function(&alg, MeroExpr::var(1));
        let f1 = ShiftOp::generator(&alg, 0).unwrap();
        assert!(shift_commutator(&z1, &z2).unwrap().pruned(1).is_empty());
        assert!(op_zero_residual(&shift_commutator(&f1, &z2).unwrap(), 5, 1).unwrap() == 0.0);
        assert!(op_zero_residual(&shift_commutator(&f1, &f1).unwrap(), 5, 1).unwrap() == 0.0);
    }

    #[test]
    fn op_equal_sensitivity() {
        let ctx = ctx();
        let alg = make_vn(1, &ctx).unwrap();
        let a = ShiftOp::function(&alg, MeroExpr::theta1(Affine::var(0)));
        let b = a.add(&ShiftOp::function(&alg, MeroExpr::constant(Complex64::new(1e-6, 0.0)))).unwrap();
        let r = op_equal(&a, &b, 10, 4).unwrap();
        assert!(r > 1e-7 && r <= 1e-6 * 1.0001, "{r}");
    }

    #[test]
    fn op_equal_periodicity() {
        let ctx = ctx();
        let alg = make_vn(1, &ctx).unwrap();
        let a = ShiftOp::function(&alg, MeroExpr::theta1(Affine::var(0) + Complex64::new(1.0, 0.0)));
        let b = ShiftOp::function(&alg, MeroExpr::theta1(Affine::var(0)));
        assert!(op_equal(&a, &b, 20, 4).unwrap() <= ctx.id_tol());
    }

    #[test]
    fn invert_only_functions() {
        let ctx = ctx();
        let alg = make_vn(2, &ctx).unwrap();
        let f = ShiftOp::generator(&alg, 0).unwrap();
        assert!(f.invert_function().is_err());
        let g = ShiftOp::function(&alg, MeroExpr::theta1(Affine::var(0)));
        let prod = shift_mul(&g, &g.invert_function().unwrap()).unwrap();
        assert!(op_equal(&prod, &ShiftOp::one(&alg), 10, 1).unwrap() < 1e-13);
    }

    #[test]
    fn mismatched_algebras() {
        let ctx = ctx();
        let a = ShiftOp::one(&make_vn(2, &ctx).unwrap());
        let b = ShiftOp::one(&make_vn(3, &ctx).unwrap());
        assert_eq!(shift_mul(&a, &b).unwrap_err(), Error::AlgebraMismatch);
    }

    #[test]
    fn sos_generators_shift_own_variable() {
        let ctx = ctx();
        let alg = make_sos(2, &ctx).unwrap();
        let s = alg.shift_matrix();
        assert_eq!(s[sos_gen(2, 1, true)][1], ctx.eta() * 2.0);
        assert_eq!(s[sos_gen(2, 1, false)][1], ctx.eta() * -2.0);
        assert_eq!(s[sos_gen(2, 1, false)][0], Complex64::new(0.0, 0.0));
    }
}
