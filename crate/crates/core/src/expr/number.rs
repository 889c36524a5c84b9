//! Scalar types the expression evaluator is generic over.
//!
//! `f64` evaluates plainly. [`Dual<T>`] adds one infinitesimal direction on
//! top of any other `Number`, so `Dual<f64>` carries a first derivative,
//! `Dual<Dual<f64>>` a mixed second derivative (hyper-dual), and so on. The
//! elementary-function rules below are written only in terms of `T`'s own
//! operations, which is what makes the nesting work.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Number:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    /// The plain real part, used for domain checks.
    fn value(&self) -> f64;
    /// True when every component (value and all derivative parts) is finite.
    fn all_finite(&self) -> bool;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn atanh(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, c: f64) -> Self;

    fn scale(self, c: f64) -> Self {
        self * Self::constant(c)
    }
}

impl Number for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn atanh(self) -> Self {
        f64::atanh(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, c: f64) -> Self {
        f64::powf(self, c)
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Number> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    /// A constant (zero derivative part).
    pub fn lift(re: T) -> Self {
        Dual {
            re,
            eps: T::constant(0.0),
        }
    }

    /// A seeded variable: derivative part set to `seed`.
    pub fn variable(re: T, seed: f64) -> Self {
        Dual {
            re,
            eps: T::constant(seed),
        }
    }

    // f(re + eps ε) = f(re) + f'(re)·eps ε
    fn chain(self, value: T, derivative: T) -> Self {
        Dual {
            re: value,
            eps: self.eps * derivative,
        }
    }
}

impl<T: Number> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Number> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Number> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Number> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual::new(q, (self.eps - q * o.eps) / o.re)
    }
}

impl<T: Number> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Number> Number for Dual<T> {
    fn constant(c: f64) -> Self {
        Dual::lift(T::constant(c))
    }

    fn value(&self) -> f64 {
        self.re.value()
    }

    fn all_finite(&self) -> bool {
        self.re.all_finite() && self.eps.all_finite()
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    fn ln(self) -> Self {
        let d = T::constant(1.0) / self.re;
        self.chain(self.re.ln(), d)
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        let d = T::constant(0.5) / s;
        self.chain(s, d)
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn tanh(self) -> Self {
        let th = self.re.tanh();
        self.chain(th, T::constant(1.0) - th * th)
    }

    fn atanh(self) -> Self {
        let d = T::constant(1.0) / (T::constant(1.0) - self.re * self.re);
        self.chain(self.re.atanh(), d)
    }

    fn abs(self) -> Self {
        if self.re.value() < 0.0 {
            -self
        } else {
            self
        }
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self,
            _ => {
                let d = self.re.powi(n - 1).scale(n as f64);
                self.chain(self.re.powi(n), d)
            }
        }
    }

    fn powf(self, c: f64) -> Self {
        let d = self.re.powf(c - 1.0).scale(c);
        self.chain(self.re.powf(c), d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D2 = Dual<Dual<f64>>;

    #[test]
    fn first_derivative_of_product() {
        let x = Dual::variable(3.0, 1.0);
        let y = x * x * x;
        assert_eq!(y.re, 27.0);
        assert_eq!(y.eps, 27.0);
    }

    #[test]
    fn nested_dual_gives_second_derivative() {
        // d²/dx² tanh(x) = -2 tanh(x) sech²(x)
        let x0 = 0.3_f64;
        let x = D2::new(Dual::variable(x0, 1.0), Dual::constant(1.0));
        let y = x.tanh();
        let th = x0.tanh();
        let expected = -2.0 * th * (1.0 - th * th);
        assert!((y.eps.eps - expected).abs() < 1e-15);
        assert!((y.re.eps - (1.0 - th * th)).abs() < 1e-15);
    }

    #[test]
    fn powi_zero_and_negative() {
        let x = Dual::variable(2.0, 1.0);
        assert_eq!(x.powi(0), Dual::constant(1.0));
        let inv = x.powi(-1);
        assert_eq!(inv.re, 0.5);
        assert_eq!(inv.eps, -0.25);
    }

    #[test]
    fn atanh_derivative_diverges_at_one() {
        let x = Dual::variable(1.0, 1.0);
        assert!(!x.atanh().all_finite());
    }
}
