//! Global numeric context shared by every evaluation.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest accepted imaginary part of the modular parameter.
pub const MIN_IM_TAU: f64 = 0.3;

/// Lattice parameter, deformation parameter and the tolerances used by
/// evaluation and identity checks.
///
/// All fields are validated on construction; a `ThetaContext` is immutable
/// afterwards and can be shared freely between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaContext {
    tau: Complex64,
    eta: Complex64,
    order_n: usize,
    trunc: usize,
    eval_tol: f64,
    id_tol: f64,
    pole_guard: f64,
}

impl ThetaContext {
    pub const DEFAULT_TRUNC: usize = 30;
    pub const DEFAULT_EVAL_TOL: f64 = 1e-12;
    pub const DEFAULT_ID_TOL: f64 = 1e-8;
    pub const DEFAULT_POLE_GUARD: f64 = 1e-6;

    pub fn new(tau: Complex64, eta: Complex64, order_n: usize) -> Result<Self> {
        Self::builder(tau, eta, order_n).build()
    }

    pub fn builder(tau: Complex64, eta: Complex64, order_n: usize) -> ThetaContextBuilder {
        ThetaContextBuilder {
            tau,
            eta,
            order_n,
            trunc: Self::DEFAULT_TRUNC,
            eval_tol: Self::DEFAULT_EVAL_TOL,
            id_tol: Self::DEFAULT_ID_TOL,
            pole_guard: Self::DEFAULT_POLE_GUARD,
        }
    }

    /// τ = 0.8i, η = 0.171717 + 0.0323i.
    pub fn default_params() -> (Complex64, Complex64) {
        (Complex64::new(0.0, 0.8), Complex64::new(0.171717, 0.0323))
    }

    pub fn with_defaults(order_n: usize) -> Self {
        let (tau, eta) = Self::default_params();
        Self::new(tau, eta, order_n).expect("default parameters are valid")
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    pub fn order_n(&self) -> usize {
        self.order_n
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn eval_tol(&self) -> f64 {
        self.eval_tol
    }

    pub fn id_tol(&self) -> f64 {
        self.id_tol
    }

    pub fn pole_guard(&self) -> f64 {
        self.pole_guard
    }

    /// Nome `q = exp(2πiτ)`.
    pub fn nome(&self) -> Complex64 {
        (Complex64::i() * std::f64::consts::TAU * self.tau).exp()
    }

    /// Same context with a different deformation parameter.
    pub fn with_eta(&self, eta: Complex64) -> Self {
        Self { eta, ..self.clone() }
    }

    /// Same context with a different default order.
    pub fn with_order(&self, order_n: usize) -> Result<Self> {
        let mut b = Self::builder(self.tau, self.eta, order_n);
        b.trunc = self.trunc;
        b.eval_tol = self.eval_tol;
        b.id_tol = self.id_tol;
        b.pole_guard = self.pole_guard;
        b.build()
    }
}

#[derive(Debug, Clone)]
pub struct ThetaContextBuilder {
    tau: Complex64,
    eta: Complex64,
    order_n: usize,
    trunc: usize,
    eval_tol: f64,
    id_tol: f64,
    pole_guard: f64,
}

impl ThetaContextBuilder {
    pub fn trunc(mut self, trunc: usize) -> Self {
        self.trunc = trunc;
        self
    }

    pub fn eval_tol(mut self, tol: f64) -> Self {
        self.eval_tol = tol;
        self
    }

    pub fn id_tol(mut self, tol: f64) -> Self {
        self.id_tol = tol;
        self
    }

    pub fn pole_guard(mut self, guard: f64) -> Self {
        self.pole_guard = guard;
        self
    }

    pub fn build(self) -> Result<ThetaContext> {
        let bad = |msg: String| Err(Error::InvalidContext(msg));
        if !(self.tau.re.is_finite() && self.tau.im.is_finite()) {
            return bad("tau must be finite".into());
        }
        if self.tau.im < MIN_IM_TAU {
            return bad(format!("Im(tau) = {} is below {MIN_IM_TAU}", self.tau.im));
        }
        if !(self.eta.re.is_finite() && self.eta.im.is_finite()) {
            return bad("eta must be finite".into());
        }
        if self.order_n == 0 {
            return bad("order must be positive".into());
        }
        if self.trunc == 0 {
            return bad("truncation must be positive".into());
        }
        for (name, v) in [
            ("eval_tol", self.eval_tol),
            ("id_tol", self.id_tol),
            ("pole_guard", self.pole_guard),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a positive real"));
            }
        }
        if self.eval_tol >= self.id_tol {
            return bad("eval_tol must be smaller than id_tol".into());
        }
        // |q|^{M^2 / 2n} < eval_tol / 100
        let log_q = -std::f64::consts::TAU * self.tau.im;
        let m = self.trunc as f64;
        let tail = log_q * m * m / (2.0 * self.order_n as f64);
        if tail >= (self.eval_tol / 100.0).ln() {
            return bad(format!(
                "truncation {} too small for order {} (tail bound exp({tail:.2}))",
                self.trunc, self.order_n
            ));
        }
        Ok(ThetaContext {
            tau: self.tau,
            eta: self.eta,
            order_n: self.order_n,
            trunc: self.trunc,
            eval_tol: self.eval_tol,
            id_tol: self.id_tol,
            pole_guard: self.pole_guard,
        })
    }
}

/// `max(1, largest magnitude)` over the terms of a cancellation.
pub fn cancellation_scale<I: IntoIterator<Item = f64>>(magnitudes: I) -> f64 {
    magnitudes.into_iter().fold(1.0, f64::max)
}

/// Relative residual `|Σ terms| / max(1, max |term|)`.
pub fn relative_residual(terms: &[Complex64]) -> f64 {
    let sum: Complex64 = terms.iter().sum();
    sum.norm() / cancellation_scale(terms.iter().map(|t| t.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_im_tau() {
        let err = ThetaContext::new(Complex64::new(0.0, 0.2), Complex64::new(0.1, 0.0), 2);
        assert!(matches!(err, Err(Error::InvalidContext(_))));
    }

    #[test]
    fn rejects_tolerance_inversion() {
        let (tau, eta) = ThetaContext::default_params();
        let err = ThetaContext::builder(tau, eta, 2)
            .eval_tol(1e-6)
            .id_tol(1e-8)
            .build();
        assert!(err.is_err());
    }

    #[test]
    fn rejects_short_truncation() {
        let (tau, eta) = ThetaContext::default_params();
        assert!(ThetaContext::builder(tau, eta, 6).trunc(3).build().is_err());
        assert!(ThetaContext::builder(tau, eta, 6).trunc(30).build().is_ok());
    }

    #[test]
    fn relative_residual_scale_floor() {
        let r = relative_residual(&[Complex64::new(1e-3, 0.0), Complex64::new(-1e-3, 1e-9)]);
        assert!((r - 1e-9).abs() < 1e-15);
    }
}
