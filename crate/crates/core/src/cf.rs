//! Cartier–Foata determinants over partially commutative algebras.
//!
//! A grid whose rows live in pairwise commuting subalgebras has a well
//! defined permutation-sum determinant once every product is taken in a
//! fixed row order. The backends here supply the arithmetic; the
//! verification routines return residuals normalised by operand norms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest determinant size accepted by [`cf_det`].
pub const MAX_DET_SIZE: usize = 6;

/// Reciprocal condition number below which an element counts as singular.
pub const MIN_RCOND: f64 = 1e-10;

/// Unital associative ring with complex scalars.
pub trait Ring {
    type Elem: Clone;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn scale(&self, c: Complex64, a: &Self::Elem) -> Self::Elem;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }
}

/// A ring with partial inversion and a norm for residuals.
pub trait AlgebraBackend: Ring {
    fn invert(&self, a: &Self::Elem) -> Result<Self::Elem>;
    /// Non-negative; zero exactly for the zero element up to tolerance.
    fn norm(&self, a: &Self::Elem) -> f64;
}

/// All permutations of `0..n` with their signs, in lexicographic order.
pub fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            out.push((prefix.clone(), permutation_sign(prefix)));
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Sign of a permutation given as an image list.
pub fn permutation_sign(p: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check_square<E>(grid: &[Vec<E>]) -> Result<usize> {
    let n = grid.len();
    if n == 0 {
        return Err(Error::Shape("empty grid".into()));
    }
    if let Some(row) = grid.iter().find(|r| r.len() != n) {
        return Err(Error::Shape(format!("row of length {} in {n}-row grid", row.len())));
    }
    if n > MAX_DET_SIZE {
        return Err(Error::TooLarge(n));
    }
    Ok(n)
}

/// Cartier–Foata determinant: `Σ_σ sign(σ) Π_r entry[r][σ(r)]`, products
/// taken in row order `0..n`.
pub fn cf_det<R: Ring>(ring: &R, grid: &[Vec<R::Elem>]) -> Result<R::Elem> {
    let n = check_square(grid)?;
    let order: Vec<usize> = (0..n).collect();
    cf_det_row_order(ring, grid, &order)
}

/// As [`cf_det`] but multiplying rows in the given order. For grids with
/// commuting rows the result does not depend on `order`.
pub fn cf_det_row_order<R: Ring>(ring: &R, grid: &[Vec<R::Elem>], order: &[usize]) -> Result<R::Elem> {
    let n = check_square(grid)?;
    if order.len() != n {
        return Err(Error::Shape(format!("row order of length {} for {n} rows", order.len())));
    }
    let mut acc = ring.zero();
    for (sigma, sign) in permutations_with_sign(n) {
        let mut term = ring.one();
        for &r in order {
            term = ring.mul(&term, &grid[r][sigma[r]]);
        }
        acc = ring.add(&acc, &ring.scale(Complex64::new(sign, 0.0), &term));
    }
    Ok(acc)
}

/// An `n × (n+1)` grid whose rows lie in pairwise commuting subalgebras.
#[derive(Clone, Debug)]
pub struct CFMatrix<E> {
    entries: Vec<Vec<E>>,
}

impl<E: Clone> CFMatrix<E> {
    pub fn new(entries: Vec<Vec<E>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(Error::Shape("matrix needs at least one row".into()));
        }
        if entries.iter().any(|r| r.len() != n + 1) {
            return Err(Error::Shape(format!("each of the {n} rows needs {} entries", n + 1)));
        }
        if n > MAX_DET_SIZE {
            return Err(Error::TooLarge(n));
        }
        Ok(CFMatrix { entries })
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<E>] {
        &self.entries
    }

    fn without_column(&self, col: usize) -> Vec<Vec<E>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect()
    }

    /// Largest normalised commutator between entries of distinct rows.
    pub fn row_commutation_residual<B>(&self, backend: &B) -> f64
    where
        B: AlgebraBackend<Elem = E>,
    {
        let mut worst = 0.0f64;
        for i in 0..self.rows() {
            for j in i + 1..self.rows() {
                for x in &self.entries[i] {
                    for y in &self.entries[j] {
                        worst = worst.max(commutator_residual(backend, x, y));
                    }
                }
            }
        }
        worst
    }
}

/// `‖xy − yx‖ / (‖x‖‖y‖)`, zero when either operand is zero.
pub fn commutator_residual<B: AlgebraBackend>(backend: &B, x: &B::Elem, y: &B::Elem) -> f64 {
    let scale = backend.norm(x) * backend.norm(y);
    if scale == 0.0 {
        return 0.0;
    }
    let c = backend.sub(&backend.mul(x, y), &backend.mul(y, x));
    backend.norm(&c) / scale
}

/// `M⁰ … Mⁿ`, where `Mⁱ` deletes column `i`.
pub fn minors<R: Ring>(ring: &R, m: &CFMatrix<R::Elem>) -> Result<Vec<R::Elem>> {
    (0..=m.rows()).map(|i| cf_det(ring, &m.without_column(i))).collect()
}

fn pairwise_commutators<B: AlgebraBackend>(backend: &B, hs: &[B::Elem]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            worst = worst.max(commutator_residual(backend, &hs[i], &hs[j]));
        }
    }
    worst
}

/// Max pairwise commutator residual of `Hᵢ = (M⁰)⁻¹Mⁱ`, `i = 1…n`.
pub fn verify_commuting_family<B: AlgebraBackend>(backend: &B, m: &CFMatrix<B::Elem>) -> Result<f64> {
    let ms = minors(backend, m)?;
    let inv = backend.invert(&ms[0])?;
    let hs: Vec<_> = ms[1..].iter().map(|mi| backend.mul(&inv, mi)).collect();
    Ok(pairwise_commutators(backend, &hs))
}

/// Residual of `Mⁱ(M⁰)⁻¹Mʲ = Mʲ(M⁰)⁻¹Mⁱ`.
pub fn verify_triangle<B: AlgebraBackend>(backend: &B, m: &CFMatrix<B::Elem>, i: usize, j: usize) -> Result<f64> {
    let n = m.rows();
    if i > n || j > n {
        return Err(Error::InvalidParameter(format!("minor index out of range 0..={n}")));
    }
    if i == j {
        return Ok(0.0);
    }
    let ms = minors(backend, m)?;
    let inv = backend.invert(&ms[0])?;
    let lhs = backend.mul(&backend.mul(&ms[i], &inv), &ms[j]);
    let rhs = backend.mul(&backend.mul(&ms[j], &inv), &ms[i]);
    let scale = backend.norm(&ms[i]) * backend.norm(&inv) * backend.norm(&ms[j]);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(backend.norm(&backend.sub(&lhs, &rhs)) / scale)
}

/// Grid `f[i][j]`, `i = 0…n`, `j = 0…n−1`, whose entries in distinct
/// columns commute. `Δᵢ` is the determinant with row `i` removed, expanded
/// column by column; returns the max pairwise residual of `Δ₀⁻¹Δᵢ`.
pub fn delta_family<B: AlgebraBackend>(backend: &B, f: &[Vec<B::Elem>]) -> Result<f64> {
    let n = f.len().checked_sub(1).ok_or_else(|| Error::Shape("empty grid".into()))?;
    if n == 0 || f.iter().any(|r| r.len() != n) {
        return Err(Error::Shape(format!("expected {} rows of {n} entries", n + 1)));
    }
    // Transposing turns columns into the commuting "rows" of cf_det.
    let deltas: Vec<B::Elem> = (0..=n)
        .map(|skip| {
            let t: Vec<Vec<B::Elem>> = (0..n)
                .map(|j| (0..=n).filter(|&i| i != skip).map(|i| f[i][j].clone()).collect())
                .collect();
            cf_det(backend, &t)
        })
        .collect::<Result<_>>()?;
    let inv = backend.invert(&deltas[0])?;
    let hs: Vec<_> = deltas[1..].iter().map(|d| backend.mul(&inv, d)).collect();
    Ok(pairwise_commutators(backend, &hs))
}

/// Plain complex numbers.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScalarBackend;

impl Ring for ScalarBackend {
    type Elem = Complex64;
    fn zero(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn one(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a + b
    }
    fn mul(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a * b
    }
    fn neg(&self, a: &Complex64) -> Complex64 {
        -a
    }
    fn scale(&self, c: Complex64, a: &Complex64) -> Complex64 {
        c * a
    }
}

impl AlgebraBackend for ScalarBackend {
    fn invert(&self, a: &Complex64) -> Result<Complex64> {
        if a.norm() == 0.0 {
            return Err(Error::NotInvertible { rcond: 0.0 });
        }
        Ok(a.inv())
    }
    fn norm(&self, a: &Complex64) -> f64 {
        a.norm()
    }
}

/// `kⁿ × kⁿ` matrices on `n` sites of dimension `k`. Operators acting on
/// different sites commute exactly.
#[derive(Clone, Copy, Debug)]
pub struct TensorBackend {
    block: usize,
    sites: usize,
}

impl TensorBackend {
    pub fn new(block: usize, sites: usize) -> Result<Self> {
        if block == 0 || sites == 0 {
            return Err(Error::InvalidParameter("block size and site count must be positive".into()));
        }
        if block.checked_pow(sites as u32).is_none_or(|d| d > 4096) {
            return Err(Error::InvalidParameter("tensor dimension too large".into()));
        }
        Ok(TensorBackend { block, sites })
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.block.pow(self.sites as u32)
    }

    /// `I ⊗ … ⊗ B ⊗ … ⊗ I` with `B` at `site`.
    pub fn embed(&self, site: usize, block: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if site >= self.sites {
            return Err(Error::InvalidParameter(format!("site {site} out of range")));
        }
        if block.nrows() != self.block || block.ncols() != self.block {
            return Err(Error::Shape(format!("block must be {0}×{0}", self.block)));
        }
        let mut acc = DMatrix::<Complex64>::identity(1, 1);
        for s in 0..self.sites {
            let factor = if s == site {
                block.clone()
            } else {
                DMatrix::identity(self.block, self.block)
            };
            acc = acc.kronecker(&factor);
        }
        Ok(acc)
    }

    /// Block with independent standard complex Gaussian entries.
    pub fn random_block<G: Rng>(&self, rng: &mut G) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.block, self.block, |_, _| gaussian(rng))
    }

    /// A site-local random element.
    pub fn random_at<G: Rng>(&self, site: usize, rng: &mut G) -> Result<DMatrix<Complex64>> {
        let b = self.random_block(rng);
        self.embed(site, &b)
    }
}

/// Standard complex Gaussian via Box–Muller.
pub fn gaussian<G: Rng>(rng: &mut G) -> Complex64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    Complex64::from_polar((-2.0 * u1.ln()).sqrt() / std::f64::consts::SQRT_2, std::f64::consts::TAU * u2)
}

impl Ring for TensorBackend {
    type Elem = DMatrix<Complex64>;
    fn zero(&self) -> Self::Elem {
        DMatrix::zeros(self.dim(), self.dim())
    }
    fn one(&self) -> Self::Elem {
        DMatrix::identity(self.dim(), self.dim())
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a + b
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a * b
    }
    fn neg(&self, a: &Self::Elem) -> Self::Elem {
        -a
    }
    fn scale(&self, c: Complex64, a: &Self::Elem) -> Self::Elem {
        a * c
    }
}

impl AlgebraBackend for TensorBackend {
    fn invert(&self, a: &Self::Elem) -> Result<Self::Elem> {
        let sv = a.singular_values();
        let max = sv.max();
        let min = sv.min();
        let rcond = if max > 0.0 { min / max } else { 0.0 };
        if rcond.is_nan() || rcond <= MIN_RCOND {
            return Err(Error::NotInvertible { rcond });
        }
        a.clone().try_inverse().ok_or(Error::NotInvertible { rcond })
    }
    fn norm(&self, a: &Self::Elem) -> f64 {
        if a.iter().all(|x| *x == Complex64::new(0.0, 0.0)) {
            return 0.0;
        }
        a.singular_values().max()
    }
}

/// Alternating `k`-form `Λ(v₁…v_k) = det[wᵣ·v_s]`: the antisymmetrisation
/// of the rank-one tensor `w₁ ⊗ … ⊗ w_k`.
#[derive(Clone, Debug)]
pub struct AlternatingForm {
    covectors: Vec<Vec<Complex64>>,
}

impl AlternatingForm {
    pub fn new(covectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let k = covectors.len();
        if k == 0 {
            return Err(Error::InvalidParameter("form of order 0".into()));
        }
        let d = covectors[0].len();
        if covectors.iter().any(|w| w.len() != d) || d < k {
            return Err(Error::Shape("covectors must share a dimension at least the order".into()));
        }
        Ok(AlternatingForm { covectors })
    }

    pub fn random<G: Rng>(order: usize, dim: usize, rng: &mut G) -> Result<Self> {
        Self::new((0..order).map(|_| random_vector(dim, rng)).collect())
    }

    pub fn order(&self) -> usize {
        self.covectors.len()
    }

    pub fn dim(&self) -> usize {
        self.covectors[0].len()
    }

    pub fn eval(&self, vectors: &[&[Complex64]]) -> Result<Complex64> {
        let k = self.order();
        if vectors.len() != k || vectors.iter().any(|v| v.len() != self.dim()) {
            return Err(Error::Shape(format!("expected {k} vectors of dimension {}", self.dim())));
        }
        let m = DMatrix::from_fn(k, k, |r, s| {
            self.covectors[r]
                .iter()
                .zip(vectors[s].iter())
                .map(|(w, v)| w * v)
                .sum::<Complex64>()
        });
        Ok(m.determinant())
    }
}

pub fn random_vector<G: Rng>(dim: usize, rng: &mut G) -> Vec<Complex64> {
    (0..dim).map(|_| gaussian(rng)).collect()
}

/// Number of vectors consumed by the quadratic/cubic/quartic identity.
pub fn plucker_arity(order: usize) -> Option<usize> {
    match order {
        2 => Some(4),
        3 => Some(5),
        4 => Some(6),
        _ => None,
    }
}

/// Residual of the Plücker identity of the form's order, relative to the
/// largest term.
///
/// * order 2, vectors `(a,b,c,d)`: `Λ(a,b)Λ(c,d) − Λ(a,c)Λ(b,d) + Λ(a,d)Λ(b,c)`
/// * order 3, vectors `(a,b,c,b',c')`: four cubic terms
/// * order 4, vectors `(a,b,c,a',b',c')`: six cubic terms
pub fn plucker_residual(form: &AlternatingForm, vectors: &[Vec<Complex64>]) -> Result<f64> {
    let order = form.order();
    let arity = plucker_arity(order)
        .ok_or_else(|| Error::InvalidParameter(format!("no identity of order {order}")))?;
    if vectors.len() != arity {
        return Err(Error::Shape(format!("order {order} needs {arity} vectors")));
    }
    let l = |idx: &[usize]| -> Result<Complex64> {
        let vs: Vec<&[Complex64]> = idx.iter().map(|&i| vectors[i].as_slice()).collect();
        form.eval(&vs)
    };
    let terms: Vec<Complex64> = match order {
        2 => {
            let (a, b, c, d) = (0, 1, 2, 3);
            vec![
                l(&[a, b])? * l(&[c, d])?,
                -(l(&[a, c])? * l(&[b, d])?),
                l(&[a, d])? * l(&[b, c])?,
            ]
        }
        3 => {
            let (a, b, c, bp, cp) = (0, 1, 2, 3, 4);
            vec![
                l(&[b, c, cp])? * l(&[a, c, bp])? * l(&[b, bp, cp])?,
                l(&[b, c, bp])? * l(&[c, bp, cp])? * l(&[a, b, cp])?,
                -(l(&[b, c, bp])? * l(&[a, c, cp])? * l(&[b, bp, cp])?),
                -(l(&[b, c, cp])? * l(&[c, bp, cp])? * l(&[a, b, bp])?),
            ]
        }
        _ => {
            let (a, b, c, ap, bp, cp) = (0, 1, 2, 3, 4, 5);
            vec![
                l(&[b, c, bp, cp])? * l(&[a, c, ap, cp])? * l(&[a, b, ap, bp])?,
                l(&[b, c, ap, cp])? * l(&[a, c, ap, bp])? * l(&[a, b, bp, cp])?,
                l(&[b, c, ap, bp])? * l(&[a, c, bp, cp])? * l(&[a, b, ap, cp])?,
                -(l(&[b, c, bp, cp])? * l(&[a, c, ap, bp])? * l(&[a, b, ap, cp])?),
                -(l(&[b, c, ap, bp])? * l(&[a, c, ap, cp])? * l(&[a, b, bp, cp])?),
                -(l(&[b, c, ap, cp])? * l(&[a, c, bp, cp])? * l(&[a, b, ap, bp])?),
            ]
        }
    };
    let total: Complex64 = terms.iter().sum();
    let largest = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    Ok(total.norm() / 1f64.max(largest))
}

/// Commuting-family and worst triangle residuals for an `n × (n+1)` grid
/// of random `k × k` blocks, row `r` acting on site `r`.
pub fn tensor_family_residuals(n: usize, k: usize, seed: u64) -> Result<(f64, f64)> {
    let tb = TensorBackend::new(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|r| (0..=n).map(|_| tb.random_at(r, &mut rng)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let m = CFMatrix::new(rows)?;
    let family = verify_commuting_family(&tb, &m)?;
    let mut triangle = 0.0f64;
    for i in 0..=n {
        for j in i + 1..=n {
            triangle = triangle.max(verify_triangle(&tb, &m, i, j)?);
        }
    }
    Ok((family, triangle))
}

/// Plücker residual for a random decomposable form of the given order in
/// dimension `2·order`, with random arguments.
pub fn plucker_seeded_residual(order: usize, seed: u64) -> Result<f64> {
    let arity = plucker_arity(order).ok_or_else(|| Error::InvalidParameter(format!("no identity of order {order}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let form = AlternatingForm::random(order, 2 * order, &mut rng)?;
    let vs: Vec<Vec<Complex64>> = (0..arity).map(|_| random_vector(2 * order, &mut rng)).collect();
    plucker_residual(&form, &vs)
}
