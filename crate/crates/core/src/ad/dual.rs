//! Forward-mode dual numbers, generic over the underlying scalar.
//!
//! `Dual<f64>` carries an exact directional derivative through a program;
//! `Dual<Var>` nests that tangent inside the reverse-mode tape, which is how
//! time partials stay differentiable with respect to parameters.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

#[derive(Clone, Copy, Debug)]
pub struct Dual<S> {
    pub re: S,
    pub dt: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, dt: S) -> Self {
        Dual { re, dt }
    }

    /// Constant with zero tangent.
    pub fn constant(re: S) -> Self {
        Dual { dt: re.lift(0.0), re }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual { re: self.re + o.re, dt: self.dt + o.dt }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual { re: self.re - o.re, dt: self.dt - o.dt }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual { re: self.re * o.re, dt: self.re * o.dt + self.dt * o.re }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let re = self.re / o.re;
        Dual { re, dt: (self.dt - re * o.dt) / o.re }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { re: -self.re, dt: -self.dt }
    }
}

impl<S: Scalar> Add<f64> for Dual<S> {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        Dual { re: self.re + c, dt: self.dt }
    }
}

impl<S: Scalar> Sub<f64> for Dual<S> {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        Dual { re: self.re - c, dt: self.dt }
    }
}

impl<S: Scalar> Mul<f64> for Dual<S> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Dual { re: self.re * c, dt: self.dt * c }
    }
}

impl<S: Scalar> Div<f64> for Dual<S> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        Dual { re: self.re / c, dt: self.dt / c }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn value(self) -> f64 {
        self.re.value()
    }

    fn lift(self, c: f64) -> Self {
        Dual { re: self.re.lift(c), dt: self.re.lift(0.0) }
    }

    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual { re: r, dt: self.dt / (r * 2.0) }
    }

    fn cbrt(self) -> Self {
        let r = self.re.cbrt();
        Dual { re: r, dt: self.dt / (r * r * 3.0) }
    }

    fn abs(self) -> Self {
        let v = self.re.value();
        if v > 0.0 {
            self
        } else if v < 0.0 {
            -self
        } else {
            Dual { re: self.re.abs(), dt: self.dt * 0.0 }
        }
    }

    fn max(self, o: Self) -> Self {
        if self.re.value() >= o.re.value() {
            self
        } else {
            o
        }
    }

    fn min(self, o: Self) -> Self {
        if self.re.value() <= o.re.value() {
            self
        } else {
            o
        }
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual { re: e, dt: self.dt * e }
    }

    fn ln(self) -> Self {
        Dual { re: self.re.ln(), dt: self.dt / self.re }
    }

    fn tanh(self) -> Self {
        let y = self.re.tanh();
        Dual { re: y, dt: self.dt - self.dt * y * y }
    }

    fn sin(self) -> Self {
        Dual { re: self.re.sin(), dt: self.dt * self.re.cos() }
    }

    fn cos(self) -> Self {
        Dual { re: self.re.cos(), dt: -(self.dt * self.re.sin()) }
    }

    fn softplus(self) -> Self {
        // d/dx softplus = sigmoid = 1 / (1 + e^{-x})
        let sig = ((-self.re).exp() + 1.0).lift(1.0) / ((-self.re).exp() + 1.0);
        Dual { re: self.re.softplus(), dt: self.dt * sig }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64) -> Dual<f64> {
        Dual::new(x, 1.0)
    }

    #[test]
    fn product_and_chain() {
        let y = (d(0.8) * d(0.8)).sin();
        assert!((y.re - 0.64_f64.sin()).abs() < 1e-15);
        assert!((y.dt - 1.6 * 0.64_f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn quotient() {
        let y = d(2.0) / (d(2.0) + 1.0);
        // d/dx [x/(x+1)] = 1/(x+1)^2
        assert!((y.dt - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn linear_in_time_has_constant_tangent() {
        // Q = (c t, 0, 0): the time partial is exactly (c, 0, 0).
        let c = 3.7;
        let t = d(1.234);
        let q = [t * c, t * 0.0, t * 0.0];
        assert_eq!(q[0].dt, c);
        assert_eq!(q[1].dt, 0.0);
        assert_eq!(q[2].dt, 0.0);
    }

    #[test]
    fn softplus_tangent_is_sigmoid() {
        let y = d(0.3).softplus();
        let sig = 1.0 / (1.0 + (-0.3_f64).exp());
        assert!((y.dt - sig).abs() < 1e-15);
    }

    #[test]
    fn nested_dual_second_derivative() {
        // f(x) = x^3: f'(x) = 3x^2, f''(x) = 6x via Dual<Dual<f64>>.
        let x = Dual::new(Dual::new(1.5, 1.0), Dual::new(1.0, 0.0));
        let y = x * x * x;
        assert!((y.re.re - 3.375).abs() < 1e-15);
        assert!((y.re.dt - 6.75).abs() < 1e-15);
        assert!((y.dt.re - 6.75).abs() < 1e-15);
        assert!((y.dt.dt - 9.0).abs() < 1e-15);
    }
}
