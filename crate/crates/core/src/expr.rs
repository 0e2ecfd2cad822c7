//! Immutable expression trees for meromorphic functions built from theta
//! factors, exponentials and rational operations.
//!
//! Every transcendental leaf takes an [`Affine`] argument, so translating a
//! variable (the action of a shift generator) or substituting one affine map
//! for another never grows a tree: it only rewrites leaf arguments.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::context::ThetaContext;
use crate::error::{Error, Result};
use crate::theta::{theta_eval, ThetaKind};

/// Index of a complex variable; assignments are slices indexed by it.
pub type VarId = usize;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `constant + Σ coeff·var`, with coefficients sorted by variable and
/// never exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    terms: Vec<(VarId, Complex64)>,
    constant: Complex64,
}

impl Affine {
    pub fn constant(c: impl Into<Complex64>) -> Self {
        Affine {
            terms: Vec::new(),
            constant: c.into(),
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, ONE)
    }

    pub fn term(v: VarId, coeff: impl Into<Complex64>) -> Self {
        let coeff = coeff.into();
        let terms = if coeff == ZERO { Vec::new() } else { vec![(v, coeff)] };
        Affine {
            terms,
            constant: ZERO,
        }
    }

    /// `Σ_{v in vars} v`.
    pub fn sum_of<I: IntoIterator<Item = VarId>>(vars: I) -> Self {
        vars.into_iter().fold(Affine::constant(ZERO), |acc, v| acc + Affine::var(v))
    }

    pub fn coeff(&self, v: VarId) -> Complex64 {
        self.terms
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, c)| *c)
            .unwrap_or(ZERO)
    }

    pub fn constant_term(&self) -> Complex64 {
        self.constant
    }

    pub fn terms(&self) -> &[(VarId, Complex64)] {
        &self.terms
    }

    pub fn eval(&self, assignment: &[Complex64]) -> Result<Complex64> {
        let mut acc = self.constant;
        for &(v, c) in &self.terms {
            let x = assignment.get(v).ok_or(Error::UnboundVariable(v))?;
            acc += c * x;
        }
        Ok(acc)
    }

    /// Replace each variable `v` by `v + shifts[v]` (missing entries are zero).
    pub fn translate(&self, shifts: &[Complex64]) -> Affine {
        let delta: Complex64 = self
            .terms
            .iter()
            .map(|&(v, c)| c * shifts.get(v).copied().unwrap_or(ZERO))
            .sum();
        Affine {
            terms: self.terms.clone(),
            constant: self.constant + delta,
        }
    }

    /// Replace each variable `v` by the affine form `map[v]`.
    pub fn substitute(&self, map: &[Affine]) -> Result<Affine> {
        let mut out = Affine::constant(self.constant);
        for &(v, c) in &self.terms {
            let image = map.get(v).ok_or(Error::UnboundVariable(v))?;
            out = out + image.clone() * c;
        }
        Ok(out)
    }

    fn combine(&self, other: &Affine, sign: f64) -> Affine {
        let mut terms: Vec<(VarId, Complex64)> = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let next = match (self.terms.get(i), other.terms.get(j)) {
                (Some(&(a, ca)), Some(&(b, cb))) if a == b => {
                    i += 1;
                    j += 1;
                    (a, ca + cb * sign)
                }
                (Some(&(a, ca)), Some(&(b, _))) if a < b => {
                    i += 1;
                    (a, ca)
                }
                (Some(_), Some(&(b, cb))) => {
                    j += 1;
                    (b, cb * sign)
                }
                (Some(&(a, ca)), None) => {
                    i += 1;
                    (a, ca)
                }
                (None, Some(&(b, cb))) => {
                    j += 1;
                    (b, cb * sign)
                }
                (None, None) => unreachable!(),
            };
            if next.1 != ZERO {
                terms.push(next);
            }
        }
        Affine {
            terms,
            constant: self.constant + other.constant * sign,
        }
    }
}

impl Add for Affine {
    type Output = Affine;
    fn add(self, rhs: Affine) -> Affine {
        self.combine(&rhs, 1.0)
    }
}

impl Sub for Affine {
    type Output = Affine;
    fn sub(self, rhs: Affine) -> Affine {
        self.combine(&rhs, -1.0)
    }
}

impl Neg for Affine {
    type Output = Affine;
    fn neg(self) -> Affine {
        self * Complex64::new(-1.0, 0.0)
    }
}

impl Add<Complex64> for Affine {
    type Output = Affine;
    fn add(mut self, rhs: Complex64) -> Affine {
        self.constant += rhs;
        self
    }
}

impl Sub<Complex64> for Affine {
    type Output = Affine;
    fn sub(mut self, rhs: Complex64) -> Affine {
        self.constant -= rhs;
        self
    }
}

impl Mul<Complex64> for Affine {
    type Output = Affine;
    fn mul(self, rhs: Complex64) -> Affine {
        if rhs == ZERO {
            return Affine::constant(ZERO);
        }
        Affine {
            terms: self.terms.into_iter().map(|(v, c)| (v, c * rhs)).collect(),
            constant: self.constant * rhs,
        }
    }
}

impl From<VarId> for Affine {
    fn from(v: VarId) -> Self {
        Affine::var(v)
    }
}

#[derive(Debug, PartialEq)]
enum Node {
    Const(Complex64),
    Affine(Affine),
    Theta { kind: ThetaKind, deriv: u32, arg: Affine },
    /// `exp(2πi·arg)`
    Exp2Pi(Affine),
    Sum(Vec<MeroExpr>),
    Product(Vec<MeroExpr>),
    Quotient(MeroExpr, MeroExpr),
    Neg(MeroExpr),
    Pow(MeroExpr, i32),
}

/// Shared, immutable expression tree. Cloning is cheap.
#[derive(Clone, PartialEq)]
pub struct MeroExpr(Arc<Node>);

impl fmt::Debug for MeroExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl MeroExpr {
    fn node(n: Node) -> Self {
        MeroExpr(Arc::new(n))
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Self::node(Node::Const(c.into()))
    }

    pub fn zero() -> Self {
        Self::constant(ZERO)
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    pub fn var(v: VarId) -> Self {
        Self::affine(Affine::var(v))
    }

    pub fn affine(a: Affine) -> Self {
        if a.terms.is_empty() {
            return Self::constant(a.constant);
        }
        Self::node(Node::Affine(a))
    }

    pub fn theta(kind: ThetaKind, arg: Affine) -> Self {
        Self::node(Node::Theta { kind, deriv: 0, arg })
    }

    /// `θ(arg)`, the order-1 theta.
    pub fn theta1(arg: Affine) -> Self {
        Self::theta(ThetaKind::One, arg)
    }

    pub fn theta_basis(i: usize, n: usize, arg: Affine) -> Self {
        Self::theta(ThetaKind::basis(i, n), arg)
    }

    pub fn theta_odd(arg: Affine) -> Self {
        Self::theta(ThetaKind::Odd, arg)
    }

    /// `Σ_i coeffs[i]·θ_i(arg)` in the order-`coeffs.len()` basis.
    pub fn theta_combination(coeffs: &[Complex64], arg: Affine) -> Self {
        let n = coeffs.len();
        Self::sum(
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != ZERO)
                .map(|(i, c)| Self::constant(*c) * Self::theta_basis(i, n, arg.clone())),
        )
    }

    /// `exp(2πi·arg)`.
    pub fn exp2pi(arg: Affine) -> Self {
        if arg.terms.is_empty() {
            return Self::constant((Complex64::new(0.0, TAU) * arg.constant).exp());
        }
        Self::node(Node::Exp2Pi(arg))
    }

    pub fn powi(&self, k: i32) -> Self {
        match (&*self.0, k) {
            (_, 0) => Self::one(),
            (_, 1) => self.clone(),
            (Node::Const(c), _) => Self::constant(c.powi(k)),
            _ => Self::node(Node::Pow(self.clone(), k)),
        }
    }

    pub fn recip(&self) -> Self {
        Self::one() / self.clone()
    }

    pub fn sum<I: IntoIterator<Item = MeroExpr>>(items: I) -> Self {
        let mut terms = Vec::new();
        let mut constant = ZERO;
        for e in items {
            match &*e.0 {
                Node::Const(c) => constant += c,
                Node::Sum(inner) => terms.extend(inner.iter().cloned()),
                _ => terms.push(e),
            }
        }
        if constant != ZERO {
            terms.push(Self::constant(constant));
        }
        match terms.len() {
            0 => Self::zero(),
            1 => terms.pop().unwrap(),
            _ => Self::node(Node::Sum(terms)),
        }
    }

    pub fn product<I: IntoIterator<Item = MeroExpr>>(items: I) -> Self {
        let mut factors = Vec::new();
        let mut constant = ONE;
        for e in items {
            match &*e.0 {
                Node::Const(c) => {
                    if *c == ZERO {
                        return Self::zero();
                    }
                    constant *= c;
                }
                Node::Product(inner) => factors.extend(inner.iter().cloned()),
                _ => factors.push(e),
            }
        }
        if constant != ONE {
            factors.insert(0, Self::constant(constant));
        }
        match factors.len() {
            0 => Self::one(),
            1 => factors.pop().unwrap(),
            _ => Self::node(Node::Product(factors)),
        }
    }

    /// True only for the literal zero constant.
    pub fn is_zero(&self) -> bool {
        matches!(&*self.0, Node::Const(c) if *c == ZERO)
    }

    pub fn as_constant(&self) -> Option<Complex64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match &*self.0 {
            Node::Const(_) => {}
            Node::Affine(a) | Node::Theta { arg: a, .. } | Node::Exp2Pi(a) => {
                out.extend(a.terms.iter().map(|(v, _)| *v));
            }
            Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Node::Quotient(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Neg(a) | Node::Pow(a, _) => a.collect_vars(out),
        }
    }

    /// Number of nodes in the tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        match &*self.0 {
            Node::Sum(xs) | Node::Product(xs) => 1 + xs.iter().map(MeroExpr::size).sum::<usize>(),
            Node::Quotient(a, b) => 1 + a.size() + b.size(),
            Node::Neg(a) | Node::Pow(a, _) => 1 + a.size(),
            _ => 1,
        }
    }

    pub fn eval(&self, assignment: &[Complex64], ctx: &ThetaContext) -> Result<Complex64> {
        match &*self.0 {
            Node::Const(c) => Ok(*c),
            Node::Affine(a) => a.eval(assignment),
            Node::Theta { kind, deriv, arg } => theta_eval(*kind, arg.eval(assignment)?, *deriv, ctx),
            Node::Exp2Pi(a) => {
                let v = (Complex64::new(0.0, TAU) * a.eval(assignment)?).exp();
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Overflow { re: v.re, im: v.im })
                }
            }
            Node::Sum(xs) => {
                let mut acc = ZERO;
                for x in xs {
                    acc += x.eval(assignment, ctx)?;
                }
                Ok(acc)
            }
            Node::Product(xs) => {
                let mut acc = ONE;
                for x in xs {
                    acc *= x.eval(assignment, ctx)?;
                }
                Ok(acc)
            }
            Node::Quotient(a, b) => {
                let den = b.eval(assignment, ctx)?;
                guard(den, ctx)?;
                Ok(a.eval(assignment, ctx)? / den)
            }
            Node::Neg(a) => Ok(-a.eval(assignment, ctx)?),
            Node::Pow(a, k) => {
                let base = a.eval(assignment, ctx)?;
                if *k < 0 {
                    guard(base, ctx)?;
                }
                Ok(base.powi(*k))
            }
        }
    }

    /// Value together with the cancellation scale: the largest summand
    /// magnitude when the root is a sum, else the value's magnitude.
    pub fn eval_with_scale(&self, assignment: &[Complex64], ctx: &ThetaContext) -> Result<(Complex64, f64)> {
        match &*self.0 {
            Node::Sum(xs) => {
                let mut acc = ZERO;
                let mut largest = 0.0f64;
                for x in xs {
                    let v = x.eval(assignment, ctx)?;
                    largest = largest.max(v.norm());
                    acc += v;
                }
                Ok((acc, largest))
            }
            _ => {
                let v = self.eval(assignment, ctx)?;
                Ok((v, v.norm()))
            }
        }
    }

    /// Exact symbolic derivative with respect to `var`.
    pub fn diff(&self, var: VarId) -> MeroExpr {
        match &*self.0 {
            Node::Const(_) => Self::zero(),
            Node::Affine(a) => Self::constant(a.coeff(var)),
            Node::Theta { kind, deriv, arg } => {
                let c = arg.coeff(var);
                if c == ZERO {
                    return Self::zero();
                }
                let d = Self::node(Node::Theta {
                    kind: *kind,
                    deriv: deriv + 1,
                    arg: arg.clone(),
                });
                Self::constant(c) * d
            }
            Node::Exp2Pi(a) => {
                let c = a.coeff(var);
                if c == ZERO {
                    return Self::zero();
                }
                Self::constant(Complex64::new(0.0, TAU) * c) * self.clone()
            }
            Node::Sum(xs) => Self::sum(xs.iter().map(|x| x.diff(var))),
            Node::Product(xs) => Self::sum((0..xs.len()).map(|i| {
                let di = xs[i].diff(var);
                if di.is_zero() {
                    return Self::zero();
                }
                Self::product(xs.iter().enumerate().map(|(j, x)| if i == j { di.clone() } else { x.clone() }))
            })),
            Node::Quotient(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                let first = da / b.clone();
                if db.is_zero() {
                    return first;
                }
                first - a.clone() * db / b.powi(2)
            }
            Node::Neg(a) => -a.diff(var),
            Node::Pow(a, k) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return Self::zero();
                }
                Self::constant(*k as f64) * a.powi(k - 1) * da
            }
        }
    }

    fn map_affine<F>(&self, f: &F) -> Result<MeroExpr>
    where
        F: Fn(&Affine) -> Result<Affine>,
    {
        Ok(match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Affine(a) => Self::affine(f(a)?),
            Node::Theta { kind, deriv, arg } => Self::node(Node::Theta {
                kind: *kind,
                deriv: *deriv,
                arg: f(arg)?,
            }),
            Node::Exp2Pi(a) => Self::exp2pi(f(a)?),
            Node::Sum(xs) => Self::node(Node::Sum(xs.iter().map(|x| x.map_affine(f)).collect::<Result<_>>()?)),
            Node::Product(xs) => {
                Self::node(Node::Product(xs.iter().map(|x| x.map_affine(f)).collect::<Result<_>>()?))
            }
            Node::Quotient(a, b) => Self::node(Node::Quotient(a.map_affine(f)?, b.map_affine(f)?)),
            Node::Neg(a) => Self::node(Node::Neg(a.map_affine(f)?)),
            Node::Pow(a, k) => Self::node(Node::Pow(a.map_affine(f)?, *k)),
        })
    }

    /// `F(v + shifts)`: every variable `v` replaced by `v + shifts[v]`.
    pub fn translate(&self, shifts: &[Complex64]) -> MeroExpr {
        if shifts.iter().all(|s| *s == ZERO) {
            return self.clone();
        }
        self.map_affine(&|a: &Affine| Ok(a.translate(shifts)))
            .expect("translation is total")
    }

    /// Compose with an affine change of variables `v ↦ map[v]`.
    pub fn substitute(&self, map: &[Affine]) -> Result<MeroExpr> {
        self.map_affine(&|a: &Affine| a.substitute(map))
    }
}

fn guard(den: Complex64, ctx: &ThetaContext) -> Result<()> {
    let magnitude = den.norm();
    if magnitude < ctx.pole_guard() || !magnitude.is_finite() {
        return Err(Error::Pole { magnitude });
    }
    Ok(())
}

impl Add for MeroExpr {
    type Output = MeroExpr;
    fn add(self, rhs: MeroExpr) -> MeroExpr {
        MeroExpr::sum([self, rhs])
    }
}

impl Sub for MeroExpr {
    type Output = MeroExpr;
    fn sub(self, rhs: MeroExpr) -> MeroExpr {
        MeroExpr::sum([self, -rhs])
    }
}

impl Mul for MeroExpr {
    type Output = MeroExpr;
    fn mul(self, rhs: MeroExpr) -> MeroExpr {
        MeroExpr::product([self, rhs])
    }
}

impl Div for MeroExpr {
    type Output = MeroExpr;
    fn div(self, rhs: MeroExpr) -> MeroExpr {
        if self.is_zero() {
            return self;
        }
        match rhs.as_constant() {
            Some(c) if c == ONE => self,
            Some(c) if c != ZERO => self * MeroExpr::constant(c.inv()),
            _ => MeroExpr::node(Node::Quotient(self, rhs)),
        }
    }
}

impl Neg for MeroExpr {
    type Output = MeroExpr;
    fn neg(self) -> MeroExpr {
        match &*self.0 {
            Node::Const(c) => MeroExpr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => MeroExpr::node(Node::Neg(self)),
        }
    }
}

impl Mul<Complex64> for MeroExpr {
    type Output = MeroExpr;
    fn mul(self, rhs: Complex64) -> MeroExpr {
        MeroExpr::constant(rhs) * self
    }
}

impl From<Complex64> for MeroExpr {
    fn from(c: Complex64) -> Self {
        MeroExpr::constant(c)
    }
}

impl From<f64> for MeroExpr {
    fn from(c: f64) -> Self {
        MeroExpr::constant(Complex64::new(c, 0.0))
    }
}
