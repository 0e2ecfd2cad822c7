//! Order-1, order-n and odd theta functions on the lattice `Z + τZ`.
//!
//! Every evaluation first moves the argument into the fundamental box
//! `Re ∈ [0, 1)`, `Im ∈ [0, Im τ)` and multiplies by the exact
//! quasi-periodicity factor, so the truncated Fourier series is only ever
//! summed where its terms decay like `|q|^{m²/2}`.
//!
//! Conventions, with `q = exp(2πiτ)`:
//!
//! * `θ(z) = e^{2πiz} Σ_m (-1)^m q^{m(m+1)/2} e^{2πimz}`, which satisfies
//!   `θ(0) = 0`, `θ(z+1) = θ(z)`, `θ(z+τ) = θ(-z) = -e^{-2πiz} θ(z)`.
//! * `θ_i(z) = Σ_k c_k e^{2πikz}` over `k ≡ i (mod n)` with
//!   `c_{k+n} = (-1)^n q^k c_k`, `c_i = 1`, giving
//!   `θ_i(z+τ) = (-1)^n e^{-2πinz} θ_i(z)`.
//! * `θ̃(z) = Σ_m exp(πi(m+½)²τ + 2πi(m+½)(z+½))`, the odd Jacobi theta
//!   with characteristic (½, ½).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::context::ThetaContext;
use crate::error::{Error, Result};

/// Terms smaller than this fraction of the largest term seen are dropped.
const SERIES_REL_CUTOFF: f64 = 1e-18;

/// Which theta function a leaf or an evaluation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaKind {
    /// The order-1 theta `θ`.
    One,
    /// Basis element `θ_index` of the order-`order` space.
    Basis { index: usize, order: usize },
    /// The odd Jacobi theta `θ̃`.
    Odd,
}

impl ThetaKind {
    pub fn basis(index: usize, order: usize) -> Self {
        assert!(order > 0, "theta basis order must be positive");
        ThetaKind::Basis {
            index: index % order,
            order,
        }
    }
}

/// Decomposition `z = reduced + a + b·τ` with `reduced` in the fundamental box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeReduction {
    pub reduced: Complex64,
    pub a: i64,
    pub b: i64,
}

impl LatticeReduction {
    pub fn new(z: Complex64, tau: Complex64) -> Self {
        let b = (z.im / tau.im).floor();
        let mut w = z - tau * b;
        // guard the half-open interval against rounding
        let mut b = b as i64;
        if w.im >= tau.im {
            w -= tau;
            b += 1;
        } else if w.im < 0.0 {
            w += tau;
            b -= 1;
        }
        let a = w.re.floor();
        let mut reduced = w - a;
        let mut a = a as i64;
        if reduced.re >= 1.0 {
            reduced -= 1.0;
            a += 1;
        }
        LatticeReduction { reduced, a, b }
    }

    /// Logarithm of the factor `M` with `θ_kind(z) = M · θ_kind(reduced)`.
    pub fn log_multiplier(&self, kind: ThetaKind, tau: Complex64) -> Complex64 {
        let i2pi = Complex64::new(0.0, TAU);
        let b = self.b as f64;
        let parity = |k: i64| {
            if k.rem_euclid(2) == 1 {
                Complex64::new(0.0, PI)
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        match kind {
            ThetaKind::One => {
                parity(self.b) - i2pi * (self.reduced * b + tau * (b * (b - 1.0) / 2.0))
            }
            ThetaKind::Basis { order, .. } => {
                let n = order as f64;
                parity(self.b * order as i64)
                    - i2pi * n * (self.reduced * b + tau * (b * (b - 1.0) / 2.0))
            }
            ThetaKind::Odd => {
                parity(self.a + self.b)
                    - Complex64::new(0.0, PI) * tau * (b * b)
                    - i2pi * self.reduced * b
            }
        }
    }

    pub fn multiplier(&self, kind: ThetaKind, tau: Complex64) -> Complex64 {
        self.log_multiplier(kind, tau).exp()
    }

    /// `d/dz log M` (the multiplier is `C·exp(λz)` in the unreduced argument).
    fn log_multiplier_slope(&self, kind: ThetaKind) -> Complex64 {
        let i2pi = Complex64::new(0.0, TAU);
        let b = self.b as f64;
        match kind {
            ThetaKind::One | ThetaKind::Odd => -i2pi * b,
            ThetaKind::Basis { order, .. } => -i2pi * b * order as f64,
        }
    }
}

/// Reduce `z` for the order-1 theta: returns `(z_reduced, multiplier)` with
/// `θ(z) = multiplier · θ(z_reduced)`.
pub fn reduce_to_fundamental(z: Complex64, ctx: &ThetaContext) -> (Complex64, Complex64) {
    let red = LatticeReduction::new(z, ctx.tau());
    (red.reduced, red.multiplier(ThetaKind::One, ctx.tau()))
}

pub fn theta1(z: Complex64, ctx: &ThetaContext) -> Result<Complex64> {
    theta_eval(ThetaKind::One, z, 0, ctx)
}

/// Basis element `θ_i` of the order-`n` theta space (`i` is taken mod `n`).
pub fn theta_basis(i: usize, n: usize, z: Complex64, ctx: &ThetaContext) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidParameter("theta basis order must be positive".into()));
    }
    theta_eval(ThetaKind::basis(i, n), z, 0, ctx)
}

pub fn theta_odd(z: Complex64, ctx: &ThetaContext) -> Result<Complex64> {
    theta_eval(ThetaKind::Odd, z, 0, ctx)
}

/// Value of the `deriv`-th derivative of the chosen theta function at `z`.
pub fn theta_eval(kind: ThetaKind, z: Complex64, deriv: u32, ctx: &ThetaContext) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Overflow { re: z.re, im: z.im });
    }
    let red = LatticeReduction::new(z, ctx.tau());
    let log_m = red.log_multiplier(kind, ctx.tau());
    let mult = log_m.exp();
    let overflow = || Error::Overflow {
        re: red.reduced.re,
        im: red.reduced.im,
    };
    if !(mult.re.is_finite() && mult.im.is_finite()) {
        return Err(overflow());
    }
    let value = if deriv == 0 {
        mult * reduced_series(kind, red.reduced, 0, ctx)[0]
    } else {
        // (C e^{λz} f(z - a - bτ))^{(k)} = C e^{λz} Σ_j binom(k,j) λ^{k-j} f^{(j)}
        let derivs = reduced_series(kind, red.reduced, deriv, ctx);
        let slope = red.log_multiplier_slope(kind);
        let k = deriv as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut binom = 1.0f64;
        for (j, d) in derivs.iter().enumerate() {
            acc += binom * slope.powu((k - j) as u32) * d;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        mult * acc
    };
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(overflow())
    }
}

/// Derivatives `0..=deriv` of the Fourier series at a reduced argument.
fn reduced_series(kind: ThetaKind, z: Complex64, deriv: u32, ctx: &ThetaContext) -> Vec<Complex64> {
    let tau = ctx.tau();
    let i2pi = Complex64::new(0.0, TAU);
    let ipi = Complex64::new(0.0, PI);
    let trunc = ctx.trunc() as i64;
    // each term is exp(log_coeff + 2πi·freq·z) for an integer summation index
    let (range_lo, range_hi): (i64, i64) = match kind {
        ThetaKind::Odd => (-trunc - 1, trunc),
        _ => (-trunc, trunc),
    };
    let term = |m: i64| -> (Complex64, f64) {
        let mf = m as f64;
        match kind {
            ThetaKind::One => {
                let sign = if m.rem_euclid(2) == 1 { ipi } else { Complex64::new(0.0, 0.0) };
                let log = sign + i2pi * (tau * (mf * (mf + 1.0) / 2.0) + z * (mf + 1.0));
                (log, mf + 1.0)
            }
            ThetaKind::Basis { index, order } => {
                let n = order as f64;
                let i = index as f64;
                let sign = if (m * order as i64).rem_euclid(2) == 1 {
                    ipi
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let freq = i + mf * n;
                let log = sign + i2pi * (tau * (i * mf + n * mf * (mf - 1.0) / 2.0) + z * freq);
                (log, freq)
            }
            ThetaKind::Odd => {
                let k = mf + 0.5;
                let log = ipi * tau * (k * k) + i2pi * k * (z + 0.5);
                (log, k)
            }
        }
    };
    let k = deriv as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); k + 1];
    let mut accumulate = |m: i64, biggest: &mut f64| -> bool {
        let (log, freq) = term(m);
        let mag = log.re.exp() * (1.0 + (TAU * freq.abs()).powi(k as i32));
        if mag > *biggest {
            *biggest = mag;
        }
        let e = log.exp();
        let w = i2pi * freq;
        let mut p = Complex64::new(1.0, 0.0);
        for slot in out.iter_mut() {
            *slot += e * p;
            p *= w;
        }
        mag >= SERIES_REL_CUTOFF * *biggest
    };
    let mut biggest = 0.0f64;
    // upward from 0, downward from -1; stop once terms fall below the cutoff
    // past the peak (|m| > 2 is always past the peak on the fundamental box)
    for m in 0..=range_hi {
        if !accumulate(m, &mut biggest) && m > 2 {
            break;
        }
    }
    for m in (range_lo..0).rev() {
        if !accumulate(m, &mut biggest) && m < -3 {
            break;
        }
    }
    out
}
