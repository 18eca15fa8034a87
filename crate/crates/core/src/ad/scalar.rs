//! Numeric abstraction shared by the plain-f64, tape, and dual-number paths.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Var;

/// Arithmetic closed over one differentiation context.
///
/// Implemented by `f64` (no derivatives), [`Var`](super::Var) (reverse mode)
/// and [`Dual`](super::Dual) (forward mode, nestable). Control flow branches
/// on [`Scalar::value`], so piecewise primitives follow the branch taken at
/// the primal point.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Primal value, used for branching decisions.
    fn value(self) -> f64;

    /// A constant in the same context as `self` (same tape, zero derivative).
    fn lift(self, c: f64) -> Self;

    fn sqrt(self) -> Self;
    fn cbrt(self) -> Self;
    fn abs(self) -> Self;
    fn max(self, o: Self) -> Self;
    fn min(self, o: Self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn softplus(self) -> Self;
}

impl Scalar for f64 {
    fn value(self) -> f64 {
        self
    }

    fn lift(self, c: f64) -> f64 {
        c
    }

    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }

    fn cbrt(self) -> f64 {
        f64::cbrt(self)
    }

    fn abs(self) -> f64 {
        f64::abs(self)
    }

    fn max(self, o: f64) -> f64 {
        if self >= o {
            self
        } else {
            o
        }
    }

    fn min(self, o: f64) -> f64 {
        if self <= o {
            self
        } else {
            o
        }
    }

    fn exp(self) -> f64 {
        f64::exp(self)
    }

    fn ln(self) -> f64 {
        f64::ln(self)
    }

    fn tanh(self) -> f64 {
        f64::tanh(self)
    }

    fn sin(self) -> f64 {
        f64::sin(self)
    }

    fn cos(self) -> f64 {
        f64::cos(self)
    }

    fn softplus(self) -> f64 {
        super::softplus(self)
    }
}

impl<'t> Scalar for Var<'t> {
    fn value(self) -> f64 {
        Var::value(self)
    }

    fn lift(self, c: f64) -> Var<'t> {
        self.constant(c)
    }

    fn sqrt(self) -> Var<'t> {
        Var::sqrt(self)
    }

    fn cbrt(self) -> Var<'t> {
        Var::cbrt(self)
    }

    fn abs(self) -> Var<'t> {
        Var::abs(self)
    }

    fn max(self, o: Var<'t>) -> Var<'t> {
        Var::max(self, o)
    }

    fn min(self, o: Var<'t>) -> Var<'t> {
        Var::min(self, o)
    }

    fn exp(self) -> Var<'t> {
        Var::exp(self)
    }

    fn ln(self) -> Var<'t> {
        Var::ln(self)
    }

    fn tanh(self) -> Var<'t> {
        Var::tanh(self)
    }

    fn sin(self) -> Var<'t> {
        Var::sin(self)
    }

    fn cos(self) -> Var<'t> {
        Var::cos(self)
    }

    fn softplus(self) -> Var<'t> {
        Var::softplus(self)
    }
}
