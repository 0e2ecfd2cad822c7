//! Classical limits: Poisson algebras of functions and commuting generators
//! with `{g_α, v_β} = c[α][β]·g_α`, determinant Hamiltonians, classical
//! bosonization and the Fay trisecant identity.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::cf::{cf_det, AlgebraBackend, Ring};
use crate::context::ThetaContext;
use crate::error::{Error, Result};
use crate::expr::{Affine, MeroExpr};
use crate::sample::{raw_draw, sample_points};
use crate::shift::MultiIndex;
use crate::theta::theta_odd;

/// Default number of sampled points for bracket identities.
pub const DEFAULT_POINTS: usize = 20;

#[derive(Clone, Debug)]
pub struct PoissonShiftAlgebra {
    var_names: Vec<String>,
    gen_names: Vec<String>,
    c: Vec<Vec<Complex64>>,
    ctx: ThetaContext,
}

impl PartialEq for PoissonShiftAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.var_names == other.var_names && self.gen_names == other.gen_names && self.c == other.c
    }
}

impl PoissonShiftAlgebra {
    pub fn new(
        var_names: Vec<String>,
        gen_names: Vec<String>,
        c: Vec<Vec<Complex64>>,
        ctx: ThetaContext,
    ) -> Result<Arc<Self>> {
        if var_names.is_empty() || gen_names.is_empty() {
            return Err(Error::InvalidParameter("an algebra needs variables and generators".into()));
        }
        if c.len() != gen_names.len() || c.iter().any(|r| r.len() != var_names.len()) {
            return Err(Error::Shape(format!(
                "bracket matrix must be {}×{}",
                gen_names.len(),
                var_names.len()
            )));
        }
        Ok(Arc::new(PoissonShiftAlgebra {
            var_names,
            gen_names,
            c,
            ctx,
        }))
    }

    pub fn vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn gens(&self) -> usize {
        self.gen_names.len()
    }

    pub fn constants(&self) -> &[Vec<Complex64>] {
        &self.c
    }

    pub fn ctx(&self) -> &ThetaContext {
        &self.ctx
    }

    pub fn unit(&self, alpha: usize) -> MultiIndex {
        let mut m = vec![0; self.gens()];
        m[alpha] = 1;
        m
    }

    pub fn zero_index(&self) -> MultiIndex {
        vec![0; self.gens()]
    }

    /// `d_β = Σ_α m_α c[α][β]`, so that `D_m = Σ_β d_β ∂_β`.
    fn derivation(&self, m: &[u32]) -> Vec<Complex64> {
        let mut d = vec![Complex64::new(0.0, 0.0); self.vars()];
        for (row, &e) in self.c.iter().zip(m) {
            if e > 0 {
                for (x, c) in d.iter_mut().zip(row) {
                    *x += c * e as f64;
                }
            }
        }
        d
    }
}

fn real_matrix(n: usize, diag: f64, off: f64) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| Complex64::new(if a == b { diag } else { off }, 0.0))
                .collect()
        })
        .collect()
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Classical `V_n`: `{f_i, z_i} = −n f_i`, other brackets zero.
pub fn make_cone(n: usize, ctx: &ThetaContext) -> Result<Arc<PoissonShiftAlgebra>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    PoissonShiftAlgebra::new(names("z", n), names("f", n), real_matrix(n, -(n as f64), 0.0), ctx.clone())
}

/// Classical `b_{p,n}`: `{e_α, u_α} = (n−2)e_α`, `{e_α, u_β} = −2e_α`.
pub fn make_bpn_classical(p: usize, n: usize, ctx: &ThetaContext) -> Result<Arc<PoissonShiftAlgebra>> {
    if p == 0 || n == 0 {
        return Err(Error::InvalidParameter("p and n must be at least 1".into()));
    }
    PoissonShiftAlgebra::new(names("u", p), names("e", p), real_matrix(p, n as f64 - 2.0, -2.0), ctx.clone())
}

/// `Σ_m F_m(v) g^m` in a Poisson algebra; the product is commutative.
#[derive(Clone, Debug)]
pub struct PoissonElement {
    algebra: Arc<PoissonShiftAlgebra>,
    terms: BTreeMap<MultiIndex, MeroExpr>,
}

type ValueMap = BTreeMap<MultiIndex, (Complex64, f64)>;

impl PoissonElement {
    pub fn zero(algebra: &Arc<PoissonShiftAlgebra>) -> Self {
        PoissonElement {
            algebra: algebra.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn function(algebra: &Arc<PoissonShiftAlgebra>, f: MeroExpr) -> Self {
        Self::monomial(algebra, algebra.zero_index(), f).expect("zero index has the right length")
    }

    pub fn one(algebra: &Arc<PoissonShiftAlgebra>) -> Self {
        Self::function(algebra, MeroExpr::one())
    }

    pub fn monomial(algebra: &Arc<PoissonShiftAlgebra>, m: MultiIndex, coeff: MeroExpr) -> Result<Self> {
        if m.len() != algebra.gens() {
            return Err(Error::Shape(format!("multi-index must have {} entries", algebra.gens())));
        }
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(m, coeff);
        }
        Ok(PoissonElement {
            algebra: algebra.clone(),
            terms,
        })
    }

    pub fn generator(algebra: &Arc<PoissonShiftAlgebra>, alpha: usize) -> Result<Self> {
        if alpha >= algebra.gens() {
            return Err(Error::InvalidParameter(format!("generator {alpha} out of range")));
        }
        Self::monomial(algebra, algebra.unit(alpha), MeroExpr::one())
    }

    pub fn from_terms<I>(algebra: &Arc<PoissonShiftAlgebra>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, MeroExpr)>,
    {
        let mut buckets: BTreeMap<MultiIndex, Vec<MeroExpr>> = BTreeMap::new();
        for (m, f) in terms {
            if m.len() != algebra.gens() {
                return Err(Error::Shape(format!("multi-index must have {} entries", algebra.gens())));
            }
            buckets.entry(m).or_default().push(f);
        }
        Ok(Self::merged(algebra, buckets))
    }

    fn merged(algebra: &Arc<PoissonShiftAlgebra>, buckets: BTreeMap<MultiIndex, Vec<MeroExpr>>) -> Self {
        let terms = buckets
            .into_iter()
            .filter_map(|(m, fs)| {
                let s = MeroExpr::sum(fs);
                (!s.is_zero()).then_some((m, s))
            })
            .collect();
        PoissonElement {
            algebra: algebra.clone(),
            terms,
        }
    }

    pub fn algebra(&self) -> &Arc<PoissonShiftAlgebra> {
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

    fn same_algebra(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) || *self.algebra == *other.algebra {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        let mut buckets: BTreeMap<MultiIndex, Vec<MeroExpr>> = BTreeMap::new();
        for (m, f) in self.terms.iter().chain(&other.terms) {
            buckets.entry(m.clone()).or_default().push(f.clone());
        }
        Ok(Self::merged(&self.algebra, buckets))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(m, f)| (m.clone(), f.clone() * c))
            .filter(|(_, f)| !f.is_zero())
            .collect();
        PoissonElement {
            algebra: self.algebra.clone(),
            terms,
        }
    }

    /// Commutative product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        Ok(mul_terms(&self.algebra, self, other))
    }

    pub fn eval_at(&self, point: &[Complex64]) -> Result<ValueMap> {
        let ctx = self.algebra.ctx();
        self.terms
            .iter()
            .map(|(m, f)| Ok((m.clone(), f.eval_with_scale(point, ctx)?)))
            .collect()
    }

    /// Value of a multiplication element (zero multi-index only).
    fn function_value(&self, point: &[Complex64]) -> Result<Complex64> {
        let zero = self.algebra.zero_index();
        if self.terms.keys().any(|m| *m != zero) {
            return Err(Error::InvalidParameter("denominator must be a function".into()));
        }
        match self.terms.get(&zero) {
            Some(f) => f.eval(point, self.algebra.ctx()),
            None => Ok(Complex64::new(0.0, 0.0)),
        }
    }
}

fn mul_terms(algebra: &Arc<PoissonShiftAlgebra>, a: &PoissonElement, b: &PoissonElement) -> PoissonElement {
    let mut buckets: BTreeMap<MultiIndex, Vec<MeroExpr>> = BTreeMap::new();
    for (m, f) in &a.terms {
        for (k, g) in &b.terms {
            let key: MultiIndex = m.iter().zip(k).map(|(x, y)| x + y).collect();
            buckets.entry(key).or_default().push(f.clone() * g.clone());
        }
    }
    PoissonElement::merged(algebra, buckets)
}

fn apply_derivation(d: &[Complex64], g: &MeroExpr) -> MeroExpr {
    MeroExpr::sum(
        d.iter()
            .enumerate()
            .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
            .map(|(beta, c)| g.diff(beta) * *c),
    )
}

/// `{F g^m, G g^k} = (F·D_m G − G·D_k F) g^{m+k}`, extended bilinearly.
pub fn pbracket(a: &PoissonElement, b: &PoissonElement) -> Result<PoissonElement> {
    a.same_algebra(b)?;
    let alg = &a.algebra;
    let mut buckets: BTreeMap<MultiIndex, Vec<MeroExpr>> = BTreeMap::new();
    for (m, f) in &a.terms {
        let dm = alg.derivation(m);
        for (k, g) in &b.terms {
            let dk = alg.derivation(k);
            let key: MultiIndex = m.iter().zip(k).map(|(x, y)| x + y).collect();
            let bucket = buckets.entry(key).or_default();
            let left = apply_derivation(&dm, g);
            if !left.is_zero() {
                bucket.push(f.clone() * left);
            }
            let right = apply_derivation(&dk, f);
            if !right.is_zero() {
                bucket.push(-(g.clone() * right));
            }
        }
    }
    Ok(PoissonElement::merged(alg, buckets))
}

fn scaled(map: ValueMap, c: Complex64) -> ValueMap {
    map.into_iter()
        .map(|(m, (v, s))| (m, (v * c, s * c.norm())))
        .collect()
}

fn mul_maps(a: &ValueMap, b: &ValueMap) -> ValueMap {
    let mut out: ValueMap = BTreeMap::new();
    for (m, (x, sx)) in a {
        for (k, (y, sy)) in b {
            let key: MultiIndex = m.iter().zip(k).map(|(p, q)| p + q).collect();
            let e = out.entry(key).or_insert((Complex64::new(0.0, 0.0), 0.0));
            e.0 += x * y;
            e.1 = e.1.max(sx * sy).max((x * y).norm());
        }
    }
    out
}

fn merge_maps(parts: Vec<ValueMap>) -> ValueMap {
    let mut out: ValueMap = BTreeMap::new();
    for part in parts {
        for (m, (v, s)) in part {
            let e = out.entry(m).or_insert((Complex64::new(0.0, 0.0), 0.0));
            e.0 += v;
            e.1 = e.1.max(s).max(v.norm());
        }
    }
    out
}

/// `{f/h, g/k}` at `point`, using the quotient rule
/// `({f,g} − (f/h){h,g} − (g/k){f,k} + (f/h)(g/k){h,k}) / (hk)`.
/// Returns per multi-index the value and the largest cancelled magnitude.
pub fn pbracket_ratio(
    f: &PoissonElement,
    h: &PoissonElement,
    g: &PoissonElement,
    k: &PoissonElement,
    point: &[Complex64],
) -> Result<BTreeMap<MultiIndex, (Complex64, f64)>> {
    let ctx = f.algebra.ctx().clone();
    let hv = h.function_value(point)?;
    let kv = k.function_value(point)?;
    for v in [hv, kv] {
        if v.norm() < ctx.pole_guard() {
            return Err(Error::Pole { magnitude: v.norm() });
        }
    }
    let fh = scaled(f.eval_at(point)?, hv.inv());
    let gk = scaled(g.eval_at(point)?, kv.inv());
    let fg = pbracket(f, g)?.eval_at(point)?;
    let hg = pbracket(h, g)?.eval_at(point)?;
    let fk = pbracket(f, k)?.eval_at(point)?;
    let hk = pbracket(h, k)?.eval_at(point)?;
    let one = Complex64::new(1.0, 0.0);
    let parts = vec![
        fg,
        scaled(mul_maps(&fh, &hg), -one),
        scaled(mul_maps(&gk, &fk), -one),
        mul_maps(&mul_maps(&fh, &gk), &hk),
    ];
    Ok(scaled(merge_maps(parts), (hv * kv).inv()))
}

fn map_residual(map: &BTreeMap<MultiIndex, (Complex64, f64)>) -> f64 {
    map.values()
        .map(|(v, s)| v.norm() / 1f64.max(*s))
        .fold(0.0, f64::max)
}

/// Commutative functions-and-generators ring, for ordinary determinants of
/// Poisson elements.
#[derive(Clone, Debug)]
pub struct PoissonBackend {
    algebra: Arc<PoissonShiftAlgebra>,
    points: Vec<Vec<Complex64>>,
}

impl PoissonBackend {
    pub fn new(algebra: &Arc<PoissonShiftAlgebra>, seed: u64) -> Self {
        let points = (0..8)
            .map(|k| raw_draw(seed, k, algebra.vars(), algebra.ctx()))
            .collect();
        PoissonBackend {
            algebra: algebra.clone(),
            points,
        }
    }
}

impl Ring for PoissonBackend {
    type Elem = PoissonElement;
    fn zero(&self) -> PoissonElement {
        PoissonElement::zero(&self.algebra)
    }
    fn one(&self) -> PoissonElement {
        PoissonElement::one(&self.algebra)
    }
    fn add(&self, a: &PoissonElement, b: &PoissonElement) -> PoissonElement {
        a.add(b).expect("backend elements share one algebra")
    }
    fn mul(&self, a: &PoissonElement, b: &PoissonElement) -> PoissonElement {
        mul_terms(&self.algebra, a, b)
    }
    fn neg(&self, a: &PoissonElement) -> PoissonElement {
        a.neg()
    }
    fn scale(&self, c: Complex64, a: &PoissonElement) -> PoissonElement {
        a.scale(c)
    }
}

impl AlgebraBackend for PoissonBackend {
    fn invert(&self, a: &PoissonElement) -> Result<PoissonElement> {
        let zero = self.algebra.zero_index();
        match (a.terms.len(), a.terms.get(&zero)) {
            (1, Some(f)) => Ok(PoissonElement::function(&self.algebra, f.recip())),
            _ => Err(Error::InvalidParameter("only functions can be inverted".into())),
        }
    }
    fn norm(&self, a: &PoissonElement) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.points {
            if let Ok(vals) = a.eval_at(p) {
                worst = vals.values().fold(worst, |w, (v, _)| w.max(v.norm()));
            }
        }
        worst
    }
}

/// `Δ₀ … Δₙ` for the grid with rows `[f_r, θ_0(z_r), …, θ_{n−1}(z_r)]` in
/// the cone algebra; `Δᵢ` deletes column `i`, so `Δ₀ = det[θ_j(z_r)]`.
/// `row_order` permutes which variable/generator pair sits in each row.
pub fn classical_deltas(n: usize, row_order: &[usize], ctx: &ThetaContext) -> Result<Vec<PoissonElement>> {
    if !(2..=6).contains(&n) {
        return Err(Error::InvalidParameter("classical family needs 2 ≤ n ≤ 6".into()));
    }
    let mut sorted = row_order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidParameter("row order must be a permutation".into()));
    }
    let alg = make_cone(n, ctx)?;
    let backend = PoissonBackend::new(&alg, 0);
    let rows: Vec<Vec<PoissonElement>> = row_order
        .iter()
        .map(|&r| {
            let mut row = vec![PoissonElement::generator(&alg, r)?];
            row.extend((0..n).map(|j| PoissonElement::function(&alg, MeroExpr::theta_basis(j, n, Affine::var(r)))));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    (0..=n)
        .map(|skip| {
            let grid: Vec<Vec<PoissonElement>> = rows
                .iter()
                .map(|row| row.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, e)| e.clone()).collect())
                .collect();
            cf_det(&backend, &grid)
        })
        .collect()
}

fn delta_guard(deltas: &[PoissonElement]) -> MeroExpr {
    deltas[0]
        .coeff(&deltas[0].algebra().zero_index())
        .cloned()
        .unwrap_or_else(MeroExpr::zero)
}

/// Max over pairs of `|{Hᵢ, Hⱼ}|` with `Hᵢ = Δᵢ/Δ₀`, relative to the
/// largest cancelled term, at `points` seeded points guarded by `Δ₀`.
pub fn classical_hamiltonians(n: usize, points: usize, seed: u64, ctx: &ThetaContext) -> Result<f64> {
    let order: Vec<usize> = (0..n).collect();
    let deltas = classical_deltas(n, &order, ctx)?;
    let pts = sample_points(points, n, &[delta_guard(&deltas)], seed, ctx)?;
    let mut worst = 0.0f64;
    for p in &pts {
        for i in 1..=n {
            for j in i + 1..=n {
                let r = pbracket_ratio(&deltas[i], &deltas[0], &deltas[j], &deltas[0], p)?;
                worst = worst.max(map_residual(&r));
            }
        }
    }
    Ok(worst)
}

/// `Hᵢ = Δᵢ/Δ₀` coefficients at a point, as multi-index → value.
pub fn hamiltonian_values(deltas: &[PoissonElement], point: &[Complex64]) -> Result<Vec<BTreeMap<MultiIndex, Complex64>>> {
    let d0 = deltas[0].function_value(point)?;
    if d0.norm() < deltas[0].algebra().ctx().pole_guard() {
        return Err(Error::Pole { magnitude: d0.norm() });
    }
    deltas[1..]
        .iter()
        .map(|d| Ok(d.eval_at(point)?.into_iter().map(|(m, (v, _))| (m, v / d0)).collect()))
        .collect()
}

/// Residual of `Δᵢ{Δⱼ,Δₖ} + Δⱼ{Δₖ,Δᵢ} + Δₖ{Δᵢ,Δⱼ} = 0`, indices in `0..=n`.
pub fn jacobi_delta_residual(n: usize, (i, j, k): (usize, usize, usize), points: usize, seed: u64, ctx: &ThetaContext) -> Result<f64> {
    if i > n || j > n || k > n {
        return Err(Error::InvalidParameter(format!("indices must lie in 0..={n}")));
    }
    jacobi_triples_residual(n, &[(i, j, k)], points, seed, ctx)
}

/// [`jacobi_delta_residual`] maximised over every triple `i < j < k`.
pub fn jacobi_all_residual(n: usize, points: usize, seed: u64, ctx: &ThetaContext) -> Result<f64> {
    let mut triples = Vec::new();
    for i in 0..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                triples.push((i, j, k));
            }
        }
    }
    jacobi_triples_residual(n, &triples, points, seed, ctx)
}

fn jacobi_triples_residual(n: usize, triples: &[(usize, usize, usize)], points: usize, seed: u64, ctx: &ThetaContext) -> Result<f64> {
    let order: Vec<usize> = (0..n).collect();
    let d = classical_deltas(n, &order, ctx)?;
    let pts = sample_points(points, n, &[delta_guard(&d)], seed, ctx)?;
    let mut brackets: BTreeMap<(usize, usize), PoissonElement> = BTreeMap::new();
    let mut worst = 0.0f64;
    for &(i, j, k) in triples {
        for pair in [(j, k), (k, i), (i, j)] {
            if let std::collections::btree_map::Entry::Vacant(e) = brackets.entry(pair) {
                e.insert(pbracket(&d[pair.0], &d[pair.1])?);
            }
        }
        let cyc = [
            d[i].mul(&brackets[&(j, k)])?,
            d[j].mul(&brackets[&(k, i)])?,
            d[k].mul(&brackets[&(i, j)])?,
        ];
        for p in &pts {
            let parts = cyc.iter().map(|e| e.eval_at(p)).collect::<Result<Vec<_>>>()?;
            worst = worst.max(map_residual(&merge_maps(parts)));
        }
    }
    Ok(worst)
}

/// `ψ_p(f) = Σ_α f(u_α) / Π_{i≠α} θ(u_α − u_i) · e_α` in classical
/// `b_{p,n}`, with `f = Σ coeffs[i] θ_i` of order `n = coeffs.len()`.
pub fn psi_p(coeffs: &[Complex64], p: usize, ctx: &ThetaContext) -> Result<PoissonElement> {
    let n = coeffs.len();
    let alg = make_bpn_classical(p, n, ctx)?;
    psi_p_in(&alg, coeffs)
}

fn psi_p_in(alg: &Arc<PoissonShiftAlgebra>, coeffs: &[Complex64]) -> Result<PoissonElement> {
    let p = alg.vars();
    let terms = (0..p).map(|a| {
        let num = MeroExpr::theta_combination(coeffs, Affine::var(a));
        let den = MeroExpr::product(
            (0..p)
                .filter(|&i| i != a)
                .map(|i| MeroExpr::theta1(Affine::var(a) - Affine::var(i))),
        );
        (alg.unit(a), num / den)
    });
    PoissonElement::from_terms(alg, terms.collect::<Vec<_>>())
}

/// Sampled `|{ψ_2(f), ψ_2(g)}|` in `b_{2,2}`, relative to the largest
/// cancelled term.
pub fn psi2_pair_residual(f: &[Complex64], g: &[Complex64], points: usize, seed: u64, ctx: &ThetaContext) -> Result<f64> {
    if f.len() != 2 || g.len() != 2 {
        return Err(Error::InvalidParameter("order-2 theta functions need two coefficients".into()));
    }
    let alg = make_bpn_classical(2, 2, ctx)?;
    let a = psi_p_in(&alg, f)?;
    let b = psi_p_in(&alg, g)?;
    let br = pbracket(&a, &b)?;
    let guard = MeroExpr::theta1(Affine::var(0) - Affine::var(1));
    let pts = sample_points(points, 2, &[guard], seed, ctx)?;
    let mut worst = 0.0f64;
    for p in &pts {
        worst = worst.max(map_residual(&br.eval_at(p)?));
    }
    Ok(worst)
}

/// Three-term Fay residual with the odd theta, relative to the largest term.
pub fn fay_residual(a: Complex64, b: Complex64, c: Complex64, d: Complex64, ctx: &ThetaContext) -> Result<f64> {
    let t = |x: Complex64| theta_odd(x, ctx);
    let terms = [
        t(a + c)? * t(a - c)? * t(b + d)? * t(b - d)?,
        -(t(a + b)? * t(a - b)? * t(c + d)? * t(c - d)?),
        t(a + d)? * t(a - d)? * t(c + b)? * t(c - b)?,
    ];
    let total: Complex64 = terms.iter().sum();
    let largest = terms.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok(total.norm() / 1f64.max(largest))
}

/// Worst Fay residual over `count` seeded quadruples in the fundamental box.
pub fn fay_sampled_residual(count: usize, seed: u64, ctx: &ThetaContext) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..count as u64 {
        let q = raw_draw(seed, k, 4, ctx);
        worst = worst.max(fay_residual(q[0], q[1], q[2], q[3], ctx)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn value(e: &PoissonElement, m: &[u32], p: &[Complex64]) -> Complex64 {
        e.coeff(m).map(|f| f.eval(p, e.algebra().ctx()).unwrap()).unwrap_or(c(0.0, 0.0))
    }

    #[test]
    fn cone_generator_bracket() {
        let ctx = ThetaContext::with_defaults(3);
        let alg = make_cone(3, &ctx).unwrap();
        let f1 = PoissonElement::generator(&alg, 0).unwrap();
        let z1 = PoissonElement::function(&alg, MeroExpr::var(0));
        let br = pbracket(&f1, &z1).unwrap();
        assert_eq!(br.len(), 1);
        assert_eq!(value(&br, &alg.unit(0), &[c(0.1, 0.0); 3]), c(-3.0, 0.0));
    }

    #[test]
    fn bpn_generator_bracket() {
        let ctx = ThetaContext::with_defaults(4);
        let alg = make_bpn_classical(2, 4, &ctx).unwrap();
        let e1 = PoissonElement::generator(&alg, 0).unwrap();
        let u2 = PoissonElement::function(&alg, MeroExpr::var(1));
        let br = pbracket(&e1, &u2).unwrap();
        assert_eq!(value(&br, &alg.unit(0), &[c(0.1, 0.0); 2]), c(-2.0, 0.0));
    }

    #[test]
    fn self_bracket_vanishes() {
        let ctx = ThetaContext::with_defaults(2);
        let a = psi_p(&[c(1.0, 0.0), c(0.5, 0.2)], 2, &ctx).unwrap();
        let br = pbracket(&a, &a).unwrap();
        let p = [c(0.3, 0.2), c(0.6, 0.5)];
        for (_, (v, s)) in br.eval_at(&p).unwrap() {
            assert!(v.norm() <= 1e-14 * s.max(1.0));
        }
    }

    #[test]
    fn psi_p1_has_no_denominator() {
        let ctx = ThetaContext::with_defaults(3);
        let a = psi_p(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], 1, &ctx).unwrap();
        assert_eq!(a.len(), 1);
        let z = c(0.3, 0.2);
        let v = value(&a, &[1], &[z]);
        assert!((v - crate::theta::theta_basis(1, 3, z, &ctx).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn ratio_with_unit_denominators_is_bracket() {
        let ctx = ThetaContext::with_defaults(2);
        let alg = make_bpn_classical(2, 2, &ctx).unwrap();
        let f = psi_p_in(&alg, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let g = psi_p_in(&alg, &[c(0.3, 0.0), c(1.0, 0.0)]).unwrap();
        let one = PoissonElement::one(&alg);
        let p = [c(0.3, 0.2), c(0.6, 0.5)];
        let r = pbracket_ratio(&f, &one, &g, &one, &p).unwrap();
        let direct = pbracket(&f, &g).unwrap().eval_at(&p).unwrap();
        for (m, (v, _)) in direct {
            assert!((r[&m].0 - v).norm() <= 1e-13 * v.norm().max(1.0));
        }
    }

    #[test]
    fn ratio_of_element_with_itself_is_constant() {
        let ctx = ThetaContext::with_defaults(3);
        let alg = make_cone(2, &ctx).unwrap();
        let h = PoissonElement::function(&alg, MeroExpr::theta1(Affine::var(0) + Affine::var(1) * c(2.0, 0.0)));
        let g = PoissonElement::generator(&alg, 0)
            .unwrap()
            .mul(&PoissonElement::function(&alg, MeroExpr::theta1(Affine::var(1))))
            .unwrap();
        let k = PoissonElement::function(&alg, MeroExpr::theta1(Affine::var(0) - Affine::var(1)));
        let r = pbracket_ratio(&h, &h, &g, &k, &[c(0.3, 0.2), c(0.6, 0.5)]).unwrap();
        assert!(map_residual(&r) < 1e-12);
    }

    #[test]
    fn fay_degenerate_cases() {
        let ctx = ThetaContext::with_defaults(1);
        let z = c(0.0, 0.0);
        assert!(fay_residual(z, z, z, z, &ctx).unwrap() <= ctx.eval_tol());
        let b = c(0.31, 0.17);
        assert!(fay_residual(c(0.1, 0.4), b, b, c(0.77, 0.05), &ctx).unwrap() <= ctx.id_tol());
    }
}
