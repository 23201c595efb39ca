//! Complex scalar abstraction over binary64 and arbitrary-precision floats.
//!
//! All numerical kernels (evaluation, Jacobians, LU solves, Newton steps) are
//! generic over [`CScalar`]. Path tracking always runs at binary64; refinement
//! and trace summation instantiate the same kernels with [`BigC`] at a mantissa
//! width chosen from the requested decimal accuracy.

use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

pub type C64 = num_complex::Complex64;

/// Binary big float with half-even rounding.
pub type BigF = FBig<HalfEven, 2>;

/// Mantissa bits of an IEEE 754 binary64.
pub const F64_PRECISION_BITS: u32 = 53;

/// Mantissa bits carrying `digits` decimal digits: 3.4 bits per digit.
///
/// The slight excess over log2(10) = 3.32 puts the rounding floor of a
/// computation just below its target accuracy, so trace magnitudes track
/// the requested digits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (((digits as f64) * 3.4).ceil() as u32).max(64)
}

/// Complex field scalar with an explicit precision in mantissa bits.
///
/// Arithmetic is closed at the precision of the operands; converting to
/// binary64 is always allowed (it is a report, not a compute path).
pub trait CScalar:
    Clone
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
    fn zero(prec: u32) -> Self;
    fn one(prec: u32) -> Self;
    fn from_c64(z: C64, prec: u32) -> Self;
    fn from_f64(x: f64, prec: u32) -> Self;
    fn to_c64(&self) -> C64;
    fn precision_bits(&self) -> u32;
    fn conj(&self) -> Self;
    /// Squared modulus, rounded to binary64. Fine for thresholds and norms;
    /// our magnitudes never leave the f64 exponent range.
    fn abs_sqr(&self) -> f64;
    fn is_finite(&self) -> bool;
    fn is_zero(&self) -> bool;

    fn abs(&self) -> f64 {
        self.abs_sqr().sqrt()
    }
}

impl CScalar for C64 {
    fn zero(_prec: u32) -> Self {
        C64::new(0.0, 0.0)
    }
    fn one(_prec: u32) -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_c64(z: C64, _prec: u32) -> Self {
        z
    }
    fn from_f64(x: f64, _prec: u32) -> Self {
        C64::new(x, 0.0)
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    fn precision_bits(&self) -> u32 {
        F64_PRECISION_BITS
    }
    fn conj(&self) -> Self {
        num_complex::Complex::conj(self)
    }
    fn abs_sqr(&self) -> f64 {
        self.norm_sqr()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// Arbitrary-precision complex number; both parts carry the same mantissa width.
#[derive(Clone, Debug, PartialEq)]
pub struct BigC {
    pub re: BigF,
    pub im: BigF,
}

impl BigC {
    pub fn new(re: BigF, im: BigF) -> Self {
        BigC { re, im }
    }

    fn big_from_f64(x: f64, prec: u32) -> BigF {
        BigF::try_from(x)
            .expect("non-finite f64 cannot enter high-precision arithmetic")
            .with_precision(prec as usize)
            .value()
    }

    /// Decimal string renderings of the real and imaginary parts.
    pub fn to_decimal_strings(&self) -> (String, String) {
        let re = self.re.clone().with_base::<10>().value();
        let im = self.im.clone().with_base::<10>().value();
        (re.to_string(), im.to_string())
    }

    /// Re-round to a mantissa width (exact when growing).
    pub fn at_precision(&self, prec: u32) -> BigC {
        BigC::new(
            self.re.clone().with_precision(prec as usize).value(),
            self.im.clone().with_precision(prec as usize).value(),
        )
    }
}

impl Add for BigC {
    type Output = BigC;
    fn add(self, rhs: BigC) -> BigC {
        BigC::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for BigC {
    type Output = BigC;
    fn sub(self, rhs: BigC) -> BigC {
        BigC::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for BigC {
    type Output = BigC;
    fn mul(self, rhs: BigC) -> BigC {
        let re = self.re.clone() * rhs.re.clone() - self.im.clone() * rhs.im.clone();
        let im = self.re * rhs.im + self.im * rhs.re;
        BigC::new(re, im)
    }
}

impl Div for BigC {
    type Output = BigC;
    fn div(self, rhs: BigC) -> BigC {
        let den = rhs.re.clone() * rhs.re.clone() + rhs.im.clone() * rhs.im.clone();
        let re = (self.re.clone() * rhs.re.clone() + self.im.clone() * rhs.im.clone())
            / den.clone();
        let im = (self.im * rhs.re - self.re * rhs.im) / den;
        BigC::new(re, im)
    }
}

impl Neg for BigC {
    type Output = BigC;
    fn neg(self) -> BigC {
        BigC::new(-self.re, -self.im)
    }
}

impl CScalar for BigC {
    fn zero(prec: u32) -> Self {
        BigC::new(
            BigF::ZERO.with_precision(prec as usize).value(),
            BigF::ZERO.with_precision(prec as usize).value(),
        )
    }
    fn one(prec: u32) -> Self {
        BigC::new(
            BigF::ONE.with_precision(prec as usize).value(),
            BigF::ZERO.with_precision(prec as usize).value(),
        )
    }
    fn from_c64(z: C64, prec: u32) -> Self {
        BigC::new(Self::big_from_f64(z.re, prec), Self::big_from_f64(z.im, prec))
    }
    fn from_f64(x: f64, prec: u32) -> Self {
        BigC::new(Self::big_from_f64(x, prec), Self::big_from_f64(0.0, prec))
    }
    fn to_c64(&self) -> C64 {
        C64::new(self.re.to_f64().value(), self.im.to_f64().value())
    }
    fn precision_bits(&self) -> u32 {
        self.re.precision().max(self.im.precision()) as u32
    }
    fn conj(&self) -> Self {
        BigC::new(self.re.clone(), -self.im.clone())
    }
    fn abs_sqr(&self) -> f64 {
        let s = self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone();
        s.to_f64().value()
    }
    fn is_finite(&self) -> bool {
        true
    }
    fn is_zero(&self) -> bool {
        self.re.repr().is_zero() && self.im.repr().is_zero()
    }
}

/// Lift a binary64 complex vector to precision `prec`; exact embedding.
pub fn lift_vec<T: CScalar>(xs: &[C64], prec: u32) -> Vec<T> {
    xs.iter().map(|&z| T::from_c64(z, prec)).collect()
}

/// Round a vector back to binary64.
pub fn lower_vec<T: CScalar>(xs: &[T]) -> Vec<C64> {
    xs.iter().map(|z| z.to_c64()).collect()
}

/// Euclidean norm of a complex vector, as binary64.
pub fn vec_norm<T: CScalar>(xs: &[T]) -> f64 {
    xs.iter().map(|z| z.abs_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus.
pub fn vec_max_abs<T: CScalar>(xs: &[T]) -> f64 {
    xs.iter().map(|z| z.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_complex_field_ops() {
        let prec = 160;
        let a = BigC::from_c64(C64::new(1.5, -2.0), prec);
        let b = BigC::from_c64(C64::new(-0.25, 3.0), prec);
        let prod = a.clone() * b.clone();
        let expect = C64::new(1.5, -2.0) * C64::new(-0.25, 3.0);
        assert!((prod.to_c64() - expect).norm() < 1e-15);
        let quot = a.clone() / b.clone();
        let back = quot * b;
        assert!((back.to_c64() - a.to_c64()).norm() < 1e-14);
        assert!(prod.precision_bits() >= prec);
    }

    #[test]
    fn f64_ingestion_is_exact() {
        let x = 0.1f64 + 0.7f64; // not exactly 0.8
        let b = BigC::from_f64(x, 200);
        assert_eq!(b.to_c64().re, x);
    }

    #[test]
    fn tiny_magnitudes_survive_roundtrip() {
        let b = BigC::from_f64(1e-40, 200);
        let sq = b.clone() * b;
        assert!((sq.abs() - 1e-80).abs() < 1e-90);
    }

    #[test]
    fn digits_to_bits_floor() {
        assert!(bits_for_digits(38) >= 129);
        assert_eq!(bits_for_digits(10), 64);
        assert_eq!(bits_for_digits(30), 102);
    }
}
