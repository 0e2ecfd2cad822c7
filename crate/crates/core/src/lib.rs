//! Numerical verification of commuting families in elliptic shift and
//! Poisson algebras.
//!
//! Every object is immutable. Randomised checks take an explicit seed and
//! draw points deterministically from it.

pub mod cf;
pub mod context;
pub mod elliptic;
pub mod error;
pub mod expr;
pub mod poisson;
pub mod sample;
pub mod shift;
pub mod theta;
pub mod transfer;

pub use cf::{cf_det, AlgebraBackend, CFMatrix, Ring, ScalarBackend, TensorBackend};
pub use context::ThetaContext;
pub use elliptic::SymThetaFun;
pub use error::{Error, Result};
pub use expr::{Affine, MeroExpr, VarId};
pub use poisson::{PoissonElement, PoissonShiftAlgebra};
pub use shift::{MultiIndex, ShiftAlgebra, ShiftOp};
pub use theta::{theta1, theta_basis, theta_eval, theta_odd, ThetaKind};
pub use transfer::TransferFamily;

pub use num_complex::Complex64;
