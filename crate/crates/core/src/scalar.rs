//! Scalar fields carried by [`Mat`](crate::matrix::Mat).
//!
//! Five backends are provided: `f64`, [`C64`], [`CDd`], [`Rational`] and
//! [`ComplexRational`]. The float backends support transcendental
//! operations (matrix exponential, square roots); the exact pair never
//! rounds and is used only for polynomial identity checks. [`CDd`] is a
//! complex double-double used where plain `f64` cancellation would swamp a
//! measurement.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use twofloat::TwoFloat;

pub type C64 = Complex<f64>;
pub type Rational = BigRational;
pub type ComplexRational = Complex<BigRational>;
/// Complex double-double (about 32 significant digits).
pub type CDd = Complex<TwoFloat>;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Short backend name used in diagnostics.
    const BACKEND: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn conj(&self) -> Self;
    /// `|z|^2`, embedded back into the field.
    fn abs_sq(&self) -> Self;
    /// Approximate magnitude, used only to pick pivots.
    fn magnitude(&self) -> f64;
}

/// Floating-point backends.
pub trait FloatScalar: Scalar + Copy {
    fn from_f64(v: f64) -> Self;
    fn to_c64(self) -> C64;
    fn abs(self) -> f64;
    fn scale(self, s: f64) -> Self;
}

/// Exact backends. Arithmetic never rounds.
pub trait ExactScalar: Scalar {}

impl Scalar for f64 {
    const BACKEND: &'static str = "real-f64";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn conj(&self) -> Self {
        *self
    }
    fn abs_sq(&self) -> Self {
        self * self
    }
    fn magnitude(&self) -> f64 {
        f64::abs(*self)
    }
}

impl FloatScalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for C64 {
    const BACKEND: &'static str = "complex-f64";

    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_i64(v: i64) -> Self {
        C64::new(v as f64, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn abs_sq(&self) -> Self {
        C64::new(self.norm_sqr(), 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl FloatScalar for C64 {
    fn from_f64(v: f64) -> Self {
        C64::new(v, 0.0)
    }
    fn to_c64(self) -> C64 {
        self
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for CDd {
    const BACKEND: &'static str = "complex-double-double";

    fn zero() -> Self {
        Complex::new(TwoFloat::from(0.0), TwoFloat::from(0.0))
    }
    fn one() -> Self {
        Complex::new(TwoFloat::from(1.0), TwoFloat::from(0.0))
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(TwoFloat::from(v), TwoFloat::from(0.0))
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn conj(&self) -> Self {
        Complex::new(self.re, -self.im)
    }
    fn abs_sq(&self) -> Self {
        Complex::new(self.re * self.re + self.im * self.im, TwoFloat::from(0.0))
    }
    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl FloatScalar for CDd {
    fn from_f64(v: f64) -> Self {
        Complex::new(TwoFloat::from(v), TwoFloat::from(0.0))
    }
    fn to_c64(self) -> C64 {
        C64::new(f64::from(self.re), f64::from(self.im))
    }
    fn abs(self) -> f64 {
        self.magnitude()
    }
    fn scale(self, s: f64) -> Self {
        let s = TwoFloat::from(s);
        Complex::new(self.re * s, self.im * s)
    }
}

pub fn c64_to_cdd(z: C64) -> CDd {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

impl Scalar for Rational {
    const BACKEND: &'static str = "rational";

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn abs_sq(&self) -> Self {
        self * self
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

impl ExactScalar for Rational {}

impl Scalar for ComplexRational {
    const BACKEND: &'static str = "complex-rational";

    fn zero() -> Self {
        Complex::new(Zero::zero(), Zero::zero())
    }
    fn one() -> Self {
        Complex::new(One::one(), Zero::zero())
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(Rational::from_i64(v), Zero::zero())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }
    fn abs_sq(&self) -> Self {
        Complex::new(&self.re * &self.re + &self.im * &self.im, Zero::zero())
    }
    fn magnitude(&self) -> f64 {
        let re = self.re.to_f64().unwrap_or(f64::INFINITY);
        let im = self.im.to_f64().unwrap_or(f64::INFINITY);
        re.hypot(im)
    }
}

impl ExactScalar for ComplexRational {}

/// `num / den` in lowest terms. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn crat(re: Rational, im: Rational) -> ComplexRational {
    Complex::new(re, im)
}

/// The imaginary unit on the exact complex backend.
pub fn crat_i() -> ComplexRational {
    Complex::new(Zero::zero(), One::one())
}

pub fn rational_to_complex(r: &Rational) -> ComplexRational {
    Complex::new(r.clone(), Zero::zero())
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn complex_rational_to_c64(z: &ComplexRational) -> C64 {
    C64::new(rational_to_f64(&z.re), rational_to_f64(&z.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_normalized() {
        let r = rat(6, -4);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(2));
        let sum = rat(1, 3) + rat(1, 6);
        assert_eq!(sum, rat(1, 2));
        assert_eq!(sum.denom(), &BigInt::from(2));
    }

    #[test]
    fn complex_rational_field_ops_are_exact() {
        let z = crat(rat(1, 3), rat(-2, 5));
        let w = crat(rat(7, 2), rat(1, 9));
        let q = z.clone() / w.clone();
        assert_eq!(q * w, z.clone());
        assert_eq!(z.abs_sq(), crat(rat(1, 9) + rat(4, 25), rat(0, 1)));
        assert_eq!(z.conj().conj(), z);
        assert_eq!(crat_i() * crat_i(), ComplexRational::from_i64(-1));
    }

    #[test]
    fn complex_float_conjugate_and_modulus() {
        let z = C64::new(3.0, 4.0);
        assert_eq!(Scalar::conj(&z), C64::new(3.0, -4.0));
        assert_eq!(z.abs_sq(), C64::new(25.0, 0.0));
        assert_eq!(FloatScalar::abs(z), 5.0);
    }
}
